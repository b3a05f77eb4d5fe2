#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apricot/core/ast.hpp"
#include "apricot/core/types.hpp"

namespace apricot {

/// Every class of a compilation unit, anonymous ones included, with the nominal
/// queries that the engine and the analyzer share.
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(const ast::CompilationUnit& unit);

  const ast::ClassDecl* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

  /// Superclass or implemented interface name.
  std::optional<std::string> parent_of(const std::string& name) const;
  ParentLookup parent_lookup() const;

  /// The class itself, then its user-defined ancestors (stops at built-in interfaces or cycles).
  std::vector<const ast::ClassDecl*> chain(const std::string& name) const;
  /// The built-in interface the class ultimately implements, if any.
  std::optional<BuiltinInterface> interface_of(const std::string& name) const;
  /// True for cyclic inheritance.
  bool cyclic(const std::string& name) const;

  /// Field declarations in initialization order: ancestors first.
  std::vector<const ast::FieldDecl*> fields(const std::string& name) const;
  /// First method of `kind` along the chain (and with `name` for user methods).
  const ast::Method* method(const std::string& cls, ast::MethodKind kind, const std::string& name = {},
                            std::optional<std::size_t> arity = std::nullopt) const;
  std::vector<const ast::Method*> constructors(const std::string& cls) const;
  /// Entries of the nearest Composition method.
  std::vector<const ast::CompositionEntry*> compositions(const std::string& cls) const;
  /// Invariant blocks (class-level) along the chain.
  std::vector<const ast::BlockStmt*> invariants(const std::string& cls) const;

  SemType type_of(const ast::TypeRef& t) const;
  SemType type_of(const std::string& name) const;

  const std::vector<ast::ClassPtr>& all() const { return classes_; }
  const std::vector<ast::ClassPtr>& top_level() const { return top_level_; }

 private:
  std::vector<ast::ClassPtr> classes_;
  std::vector<ast::ClassPtr> top_level_;
  std::map<std::string, const ast::ClassDecl*> by_name_;
};

/// Pre-order walk over every expression reachable from a statement or expression,
/// without descending into anonymous class bodies.
void for_each_expr(const ast::Expr& e, const std::function<void(const ast::Expr&)>& fn);
void for_each_expr(const ast::Stmt& s, const std::function<void(const ast::Expr&)>& fn);
/// Every expression in a class (fields, methods, blocks), not descending into anonymous bodies.
void for_each_expr(const ast::ClassDecl& c, const std::function<void(const ast::Expr&)>& fn);

}  // namespace apricot

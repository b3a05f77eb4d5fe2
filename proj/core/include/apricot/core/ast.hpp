#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "apricot/core/source.hpp"
#include "apricot/core/value.hpp"

namespace apricot::ast {

struct Expr;
struct Stmt;
struct ClassDecl;
using ExprPtr = std::shared_ptr<const Expr>;
using StmtPtr = std::shared_ptr<const Stmt>;
using ClassPtr = std::shared_ptr<const ClassDecl>;

enum class UnaryOp { Plus, Minus, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Xor };

bool is_relational(BinaryOp op);
std::string_view spelling(BinaryOp op);
std::string_view spelling(UnaryOp op);

// ---- expressions ---------------------------------------------------------

struct Literal {
  Value value;  // Integer, Real, Boolean, Null, Inf or -Inf
};
struct Name {
  std::string id;
};
struct This {};
/// `Skip` in value position: an Assignment field or an action slot.
struct SkipExpr {};
struct Member {
  ExprPtr object;
  std::string member;
};
struct Index {
  ExprPtr array;
  ExprPtr index;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct IntervalExpr {
  ExprPtr lo;
  ExprPtr hi;
  bool lo_open = false;
  bool hi_open = false;
};
struct In {
  ExprPtr value;
  IntervalExpr interval;
};
/// Function or method call. `target` is set for `obj.m(...)`.
struct Call {
  ExprPtr target;
  std::string name;
  std::vector<ExprPtr> args;
};
/// `dot(v, n)` or `dot(v, u, n)`.
struct Dot {
  ExprPtr var;
  ExprPtr wrt;
  int order = 1;
};
struct ArrayLit {
  std::vector<ExprPtr> elems;
};
/// `new C(args)` or `new I(){ body }` (anonymous class).
struct New {
  std::string type_name;
  std::vector<ExprPtr> args;
  ClassPtr anonymous;
};

struct Expr {
  using Node = std::variant<Literal, Name, This, SkipExpr, Member, Index, Unary, Binary, In, Call, Dot, ArrayLit, New>;
  Span span;
  Node node;

  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
  template <class T>
  bool is() const { return std::holds_alternative<T>(node); }
};

template <class T>
ExprPtr make_expr(Span span, T node) {
  return std::make_shared<const Expr>(Expr{span, Expr::Node(std::move(node))});
}

// ---- statements ----------------------------------------------------------

struct TypeRef {
  std::string name;  // `Real`, `real`, `Dynamic`, or a class name
  bool array = false;
  Span span;
};

struct VarDeclarator {
  std::string name;
  bool array = false;
  ExprPtr init;
  Span span;
};

/// `[Constant] Type a [= e], b[] = {..};` as a field or a local.
struct VarDecl {
  bool constant = false;
  TypeRef type;
  std::vector<VarDeclarator> vars;
};

struct Assign {
  ExprPtr target;
  ExprPtr value;
};
struct ExprStmt {
  ExprPtr expr;
};
/// `a || b || ...`: component parallelism or synchronised compositions.
struct ParallelStmt {
  std::vector<ExprPtr> branches;
};
/// `x.d.start();`. After normalisation one statement carries every start of an Init.
struct StartStmt {
  std::vector<ExprPtr> targets;
};
struct ReturnStmt {
  ExprPtr value;
};
struct SkipStmt {};

enum class BlockKind { Invariant, Condition };
std::string_view to_string(BlockKind k);

/// `Invariant{...};` or `Condition{...};`
struct BlockStmt {
  BlockKind kind;
  std::vector<ExprPtr> items;
};

/// `Name(src, act, dst){ Condition{...}; };`. Empty slots are null until normalised.
struct CompositionEntry {
  std::string name;
  std::vector<ExprPtr> slots;
  std::vector<StmtPtr> body;
};

struct Stmt {
  using Node = std::variant<VarDecl, Assign, ExprStmt, ParallelStmt, StartStmt, ReturnStmt, SkipStmt, BlockStmt,
                            CompositionEntry>;
  Span span;
  Node node;

  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
  template <class T>
  bool is() const { return std::holds_alternative<T>(node); }
};

template <class T>
StmtPtr make_stmt(Span span, T node) {
  return std::make_shared<const Stmt>(Stmt{span, Stmt::Node(std::move(node))});
}

// ---- declarations --------------------------------------------------------

enum class MethodKind { Constructor, Init, Continuous, Discrete, Composition, User };
std::string_view to_string(MethodKind k);

enum class AssignMode { Unspecified, Sequential, Parallel };

struct Param {
  TypeRef type;
  std::string name;
  Span span;
};

struct Method {
  MethodKind kind = MethodKind::User;
  std::string name;
  std::optional<TypeRef> return_type;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  AssignMode mode = AssignMode::Unspecified;  // Discrete only, set by normalisation
  Span span;
};

struct FieldDecl {
  VarDecl decl;
  Span span;
};

struct ClassBlock {
  BlockStmt block;
  Span span;
};

using MemberNode = std::variant<FieldDecl, Method, ClassBlock>;

enum class ClassForm { TopLevel, InterfaceImpl, Inheritance };

struct ClassDecl {
  std::string name;
  ClassForm form = ClassForm::TopLevel;
  std::string parent;  // interface or superclass, empty for top-level
  bool anonymous = false;
  std::vector<MemberNode> members;
  Span span;

  std::vector<const FieldDecl*> fields() const;
  std::vector<const Method*> methods(MethodKind kind) const;
  const Method* method(MethodKind kind) const;
  std::vector<const ClassBlock*> blocks() const;
};

struct CompilationUnit {
  std::vector<ClassPtr> classes;
};

/// Span-free structural rendering, used for structural equality.
std::string to_sexpr(const Expr& e);
std::string to_sexpr(const Stmt& s);
std::string to_sexpr(const ClassDecl& c);
std::string to_sexpr(const CompilationUnit& u);

bool structurally_equal(const CompilationUnit& a, const CompilationUnit& b);

}  // namespace apricot::ast

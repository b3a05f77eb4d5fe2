#include "apricot/core/classes.hpp"

#include <set>

namespace apricot {

using namespace apricot::ast;

void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  auto rec = [&](const ExprPtr& p) {
    if (p) for_each_expr(*p, fn);
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Member>) {
          rec(n.object);
        } else if constexpr (std::is_same_v<T, Index>) {
          rec(n.array);
          rec(n.index);
        } else if constexpr (std::is_same_v<T, Unary>) {
          rec(n.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          rec(n.lhs);
          rec(n.rhs);
        } else if constexpr (std::is_same_v<T, In>) {
          rec(n.value);
          rec(n.interval.lo);
          rec(n.interval.hi);
        } else if constexpr (std::is_same_v<T, Call>) {
          rec(n.target);
          for (const auto& a : n.args) rec(a);
        } else if constexpr (std::is_same_v<T, Dot>) {
          rec(n.var);
          rec(n.wrt);
        } else if constexpr (std::is_same_v<T, ArrayLit>) {
          for (const auto& a : n.elems) rec(a);
        } else if constexpr (std::is_same_v<T, New>) {
          for (const auto& a : n.args) rec(a);
        }
      },
      e.node);
}

void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& fn) {
  auto rec = [&](const ExprPtr& p) {
    if (p) for_each_expr(*p, fn);
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VarDecl>) {
          for (const auto& v : n.vars) rec(v.init);
        } else if constexpr (std::is_same_v<T, Assign>) {
          rec(n.target);
          rec(n.value);
        } else if constexpr (std::is_same_v<T, ExprStmt>) {
          rec(n.expr);
        } else if constexpr (std::is_same_v<T, ParallelStmt>) {
          for (const auto& b : n.branches) rec(b);
        } else if constexpr (std::is_same_v<T, StartStmt>) {
          for (const auto& t : n.targets) rec(t);
        } else if constexpr (std::is_same_v<T, ReturnStmt>) {
          rec(n.value);
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          for (const auto& i : n.items) rec(i);
        } else if constexpr (std::is_same_v<T, CompositionEntry>) {
          for (const auto& sl : n.slots) rec(sl);
          for (const auto& b : n.body) for_each_expr(*b, fn);
        }
      },
      s.node);
}

void for_each_expr(const ClassDecl& c, const std::function<void(const Expr&)>& fn) {
  for (const auto& m : c.members) {
    if (const auto* f = std::get_if<FieldDecl>(&m)) {
      for (const auto& v : f->decl.vars)
        if (v.init) for_each_expr(*v.init, fn);
    } else if (const auto* me = std::get_if<Method>(&m)) {
      for (const auto& s : me->body) for_each_expr(*s, fn);
    } else if (const auto* b = std::get_if<ClassBlock>(&m)) {
      for (const auto& i : b->block.items) for_each_expr(*i, fn);
    }
  }
}

namespace {
void collect(const ClassPtr& c, std::vector<ClassPtr>& out) {
  out.push_back(c);
  for_each_expr(*c, [&](const Expr& e) {
    if (const auto* n = e.as<New>(); n && n->anonymous) collect(n->anonymous, out);
  });
}
}  // namespace

ClassTable::ClassTable(const CompilationUnit& unit) {
  top_level_ = unit.classes;
  for (const auto& c : unit.classes) collect(c, classes_);
  for (const auto& c : classes_) by_name_.try_emplace(c->name, c.get());
}

const ClassDecl* ClassTable::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::optional<std::string> ClassTable::parent_of(const std::string& name) const {
  const ClassDecl* c = find(name);
  if (!c || c->parent.empty()) return std::nullopt;
  return c->parent;
}

ParentLookup ClassTable::parent_lookup() const {
  return [this](const std::string& n) { return parent_of(n); };
}

std::vector<const ClassDecl*> ClassTable::chain(const std::string& name) const {
  std::vector<const ClassDecl*> out;
  std::set<std::string> seen;
  std::string cur = name;
  while (const ClassDecl* c = find(cur)) {
    if (!seen.insert(cur).second) break;
    out.push_back(c);
    if (c->parent.empty() || builtin_interface_from(c->parent)) break;
    cur = c->parent;
  }
  return out;
}

bool ClassTable::cyclic(const std::string& name) const {
  std::set<std::string> seen;
  std::string cur = name;
  while (const ClassDecl* c = find(cur)) {
    if (!seen.insert(cur).second) return true;
    if (c->parent.empty()) return false;
    cur = c->parent;
  }
  return false;
}

std::optional<BuiltinInterface> ClassTable::interface_of(const std::string& name) const {
  auto ch = chain(name);
  if (ch.empty()) return builtin_interface_from(name);
  return builtin_interface_from(ch.back()->parent);
}

std::vector<const FieldDecl*> ClassTable::fields(const std::string& name) const {
  auto ch = chain(name);
  std::vector<const FieldDecl*> out;
  for (auto it = ch.rbegin(); it != ch.rend(); ++it)
    for (const auto* f : (*it)->fields()) out.push_back(f);
  return out;
}

const Method* ClassTable::method(const std::string& cls, MethodKind kind, const std::string& name,
                                 std::optional<std::size_t> arity) const {
  for (const auto* c : chain(cls))
    for (const auto* m : c->methods(kind)) {
      if (!name.empty() && m->name != name) continue;
      if (arity && m->params.size() != *arity) continue;
      return m;
    }
  return nullptr;
}

std::vector<const Method*> ClassTable::constructors(const std::string& cls) const {
  const ClassDecl* c = find(cls);
  return c ? c->methods(MethodKind::Constructor) : std::vector<const Method*>{};
}

std::vector<const CompositionEntry*> ClassTable::compositions(const std::string& cls) const {
  std::vector<const CompositionEntry*> out;
  if (const Method* m = method(cls, MethodKind::Composition))
    for (const auto& s : m->body)
      if (const auto* e = s->as<CompositionEntry>()) out.push_back(e);
  return out;
}

std::vector<const BlockStmt*> ClassTable::invariants(const std::string& cls) const {
  std::vector<const BlockStmt*> out;
  for (const auto* c : chain(cls))
    for (const auto* b : c->blocks())
      if (b->block.kind == BlockKind::Invariant) out.push_back(&b->block);
  return out;
}

SemType ClassTable::type_of(const std::string& n) const {
  if (n == "Real") return SemType::mathematic(Scalar::Real);
  if (n == "Integer") return SemType::mathematic(Scalar::Integer);
  if (n == "Boolean") return SemType::mathematic(Scalar::Boolean);
  if (n == "real") return SemType::primitive(Scalar::Real);
  if (n == "integer") return SemType::primitive(Scalar::Integer);
  if (n == "boolean") return SemType::primitive(Scalar::Boolean);
  if (builtin_interface_from(n)) return SemType::interface_type(n);
  if (contains(n)) return SemType::class_type(n);
  return SemType::unknown();
}

SemType ClassTable::type_of(const TypeRef& t) const {
  SemType base = type_of(t.name);
  return t.array ? SemType::array_of(base) : base;
}

}  // namespace apricot

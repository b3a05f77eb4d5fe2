#include "apricot/core/ast.hpp"

namespace apricot::ast {

bool is_relational(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return true;
    default: return false;
  }
}

std::string_view spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    case BinaryOp::Xor: return "xor";
  }
  return "?";
}

std::string_view spelling(UnaryOp op) {
  switch (op) {
    case UnaryOp::Plus: return "+";
    case UnaryOp::Minus: return "-";
    case UnaryOp::Not: return "!";
  }
  return "?";
}

std::string_view to_string(BlockKind k) { return k == BlockKind::Invariant ? "Invariant" : "Condition"; }

std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::Constructor: return "constructor";
    case MethodKind::Init: return "Init";
    case MethodKind::Continuous: return "Continuous";
    case MethodKind::Discrete: return "Discrete";
    case MethodKind::Composition: return "Composition";
    case MethodKind::User: return "method";
  }
  return "?";
}

std::vector<const FieldDecl*> ClassDecl::fields() const {
  std::vector<const FieldDecl*> out;
  for (const auto& m : members)
    if (const auto* f = std::get_if<FieldDecl>(&m)) out.push_back(f);
  return out;
}

std::vector<const Method*> ClassDecl::methods(MethodKind kind) const {
  std::vector<const Method*> out;
  for (const auto& m : members)
    if (const auto* mm = std::get_if<Method>(&m); mm && mm->kind == kind) out.push_back(mm);
  return out;
}

const Method* ClassDecl::method(MethodKind kind) const {
  for (const auto& m : members)
    if (const auto* mm = std::get_if<Method>(&m); mm && mm->kind == kind) return mm;
  return nullptr;
}

std::vector<const ClassBlock*> ClassDecl::blocks() const {
  std::vector<const ClassBlock*> out;
  for (const auto& m : members)
    if (const auto* b = std::get_if<ClassBlock>(&m)) out.push_back(b);
  return out;
}

// ---- s-expressions -------------------------------------------------------

namespace {

std::string sx(const ExprPtr& e) { return e ? to_sexpr(*e) : std::string("_"); }

std::string sx_list(const std::vector<ExprPtr>& es) {
  std::string out;
  for (const auto& e : es) out += ' ' + sx(e);
  return out;
}

std::string sx_body(const std::vector<StmtPtr>& body) {
  std::string out;
  for (const auto& s : body) out += ' ' + to_sexpr(*s);
  return out;
}

std::string sx_type(const TypeRef& t) { return t.name + (t.array ? "[]" : ""); }

std::string sx_decl(const VarDecl& d) {
  std::string out = std::string("(decl") + (d.constant ? " const " : " ") + sx_type(d.type);
  for (const auto& v : d.vars) out += " (" + v.name + (v.array ? "[]" : "") + ' ' + sx(v.init) + ')';
  return out + ')';
}

std::string sx_method(const Method& m) {
  std::string out = "(" + std::string(to_string(m.kind)) + ' ' + m.name;
  if (m.return_type) out += " :" + sx_type(*m.return_type);
  out += " (";
  for (const auto& p : m.params) out += ' ' + sx_type(p.type) + ' ' + p.name;
  out += ")";
  if (m.mode == AssignMode::Parallel) out += " parallel";
  if (m.mode == AssignMode::Sequential) out += " sequential";
  return out + sx_body(m.body) + ')';
}

}  // namespace

std::string to_sexpr(const Expr& e) {
  struct V {
    std::string operator()(const Literal& l) const { return l.value.to_string(); }
    std::string operator()(const Name& n) const { return n.id; }
    std::string operator()(const This&) const { return "this"; }
    std::string operator()(const SkipExpr&) const { return "Skip"; }
    std::string operator()(const Member& m) const { return "(. " + sx(m.object) + ' ' + m.member + ')'; }
    std::string operator()(const Index& i) const { return "([] " + sx(i.array) + ' ' + sx(i.index) + ')'; }
    std::string operator()(const Unary& u) const { return "(" + std::string(spelling(u.op)) + "u " + sx(u.operand) + ')'; }
    std::string operator()(const Binary& b) const {
      return "(" + std::string(spelling(b.op)) + ' ' + sx(b.lhs) + ' ' + sx(b.rhs) + ')';
    }
    std::string operator()(const In& i) const {
      return "(in " + sx(i.value) + ' ' + (i.interval.lo_open ? "(" : "[") + sx(i.interval.lo) + ' ' +
             sx(i.interval.hi) + (i.interval.hi_open ? ")" : "]") + ')';
    }
    std::string operator()(const Call& c) const { return "(call " + sx(c.target) + ' ' + c.name + sx_list(c.args) + ')'; }
    std::string operator()(const Dot& d) const {
      return "(dot " + sx(d.var) + (d.wrt ? ' ' + sx(d.wrt) : std::string()) + ' ' + std::to_string(d.order) + ')';
    }
    std::string operator()(const ArrayLit& a) const { return "(array" + sx_list(a.elems) + ')'; }
    std::string operator()(const New& n) const {
      return "(new " + n.type_name + sx_list(n.args) + (n.anonymous ? ' ' + to_sexpr(*n.anonymous) : std::string()) + ')';
    }
  };
  return std::visit(V{}, e.node);
}

std::string to_sexpr(const Stmt& s) {
  struct V {
    std::string operator()(const VarDecl& d) const { return sx_decl(d); }
    std::string operator()(const Assign& a) const { return "(= " + sx(a.target) + ' ' + sx(a.value) + ')'; }
    std::string operator()(const ExprStmt& e) const { return "(expr " + sx(e.expr) + ')'; }
    std::string operator()(const ParallelStmt& p) const { return "(||" + sx_list(p.branches) + ')'; }
    std::string operator()(const StartStmt& s) const { return "(start" + sx_list(s.targets) + ')'; }
    std::string operator()(const ReturnStmt& r) const { return "(return " + sx(r.value) + ')'; }
    std::string operator()(const SkipStmt&) const { return "(skip)"; }
    std::string operator()(const BlockStmt& b) const {
      return "(" + std::string(to_string(b.kind)) + sx_list(b.items) + ')';
    }
    std::string operator()(const CompositionEntry& c) const {
      return "(comp " + c.name + " (" + sx_list(c.slots) + ")" + sx_body(c.body) + ')';
    }
  };
  return std::visit(V{}, s.node);
}

std::string to_sexpr(const ClassDecl& c) {
  std::string out = "(class " + c.name;
  switch (c.form) {
    case ClassForm::TopLevel: out += " top"; break;
    case ClassForm::InterfaceImpl: out += " implements " + c.parent; break;
    case ClassForm::Inheritance: out += " extends " + c.parent; break;
  }
  if (c.anonymous) out += " anonymous";
  for (const auto& m : c.members) {
    out += ' ';
    if (const auto* f = std::get_if<FieldDecl>(&m)) out += sx_decl(f->decl);
    if (const auto* mm = std::get_if<Method>(&m)) out += sx_method(*mm);
    if (const auto* b = std::get_if<ClassBlock>(&m))
      out += "(" + std::string(to_string(b->block.kind)) + sx_list(b->block.items) + ')';
  }
  return out + ')';
}

std::string to_sexpr(const CompilationUnit& u) {
  std::string out = "(unit";
  for (const auto& c : u.classes) out += ' ' + to_sexpr(*c);
  return out + ')';
}

bool structurally_equal(const CompilationUnit& a, const CompilationUnit& b) { return to_sexpr(a) == to_sexpr(b); }

}  // namespace apricot::ast

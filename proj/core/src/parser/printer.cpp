#include "apricot/parser/printer.hpp"

#include <charconv>
#include <cmath>

namespace apricot::parse {

namespace {

using namespace apricot::ast;

enum Prec { kOr = 1, kXor, kAnd, kNot, kIn, kRel, kAdd, kMul, kUnary, kPostfix };

int prec_of(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kOr;
    case BinaryOp::Xor: return kXor;
    case BinaryOp::And: return kAnd;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kAdd;
    case BinaryOp::Mul:
    case BinaryOp::Div: return kMul;
    default: return kRel;
  }
}

int prec_of(const Expr& e) {
  if (const auto* b = e.as<Binary>()) return prec_of(b->op);
  if (const auto* u = e.as<Unary>()) return u->op == UnaryOp::Not ? kNot : kUnary;
  if (e.is<In>()) return kIn;
  if (const auto* l = e.as<Literal>()) {
    // a negative literal reparses through the unary rule
    const Value& v = l->value;
    if (v.is_neg_inf() || (v.is_real() && std::signbit(v.as_real())) || (v.is_integer() && v.as_integer() < 0))
      return kUnary;
  }
  return kPostfix;
}

std::string literal_text(const Value& v) {
  if (v.is_real()) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v.as_real());
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  return v.to_string();
}

std::string expr_at(const Expr& e, int min_prec);

std::string join_args(const std::vector<ExprPtr>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += print_expr(*args[i]);
  }
  return out;
}

std::string class_body(const ClassDecl& c, int indent);

struct ExprPrinter {
  std::string operator()(const Literal& l) const { return literal_text(l.value); }
  std::string operator()(const Name& n) const { return n.id; }
  std::string operator()(const This&) const { return "this"; }
  std::string operator()(const SkipExpr&) const { return "Skip"; }
  std::string operator()(const Member& m) const { return expr_at(*m.object, kPostfix) + "." + m.member; }
  std::string operator()(const Index& i) const { return expr_at(*i.array, kPostfix) + "[" + print_expr(*i.index) + "]"; }
  std::string operator()(const Unary& u) const {
    std::string inner = expr_at(*u.operand, u.op == UnaryOp::Not ? kNot : kUnary);
    std::string op(spelling(u.op));
    if (!inner.empty() && (inner[0] == '-' || inner[0] == '+' || inner[0] == '!')) op += ' ';
    return op + inner;
  }
  std::string operator()(const Binary& b) const {
    int p = prec_of(b.op);
    if (is_relational(b.op)) return expr_at(*b.lhs, p + 1) + " " + std::string(spelling(b.op)) + " " + expr_at(*b.rhs, p + 1);
    return expr_at(*b.lhs, p) + " " + std::string(spelling(b.op)) + " " + expr_at(*b.rhs, p + 1);
  }
  std::string operator()(const In& i) const {
    const auto& iv = i.interval;
    return expr_at(*i.value, kRel) + " in " + (iv.lo_open ? "(" : "[") + print_expr(*iv.lo) + ", " + print_expr(*iv.hi) +
           (iv.hi_open ? ")" : "]");
  }
  std::string operator()(const Call& c) const {
    std::string head = c.target ? expr_at(*c.target, kPostfix) + "." + c.name : c.name;
    return head + "(" + join_args(c.args) + ")";
  }
  std::string operator()(const Dot& d) const {
    return "dot(" + expr_at(*d.var, kPostfix) + ", " + (d.wrt ? expr_at(*d.wrt, kPostfix) + ", " : std::string()) +
           std::to_string(d.order) + ")";
  }
  std::string operator()(const ArrayLit& a) const { return "{" + join_args(a.elems) + "}"; }
  std::string operator()(const New& n) const {
    std::string out = "new " + n.type_name + "(" + join_args(n.args) + ")";
    if (n.anonymous) out += " {\n" + class_body(*n.anonymous, 2) + "}";
    return out;
  }
};

std::string expr_at(const Expr& e, int min_prec) {
  std::string s = std::visit(ExprPrinter{}, e.node);
  return prec_of(e) < min_prec ? "(" + s + ")" : s;
}

std::string pad(int n) { return std::string(static_cast<std::size_t>(n) * 2, ' '); }

std::string type_text(const TypeRef& t) { return t.name + (t.array ? "[]" : ""); }

std::string var_decl_text(const VarDecl& d) {
  std::string out = d.constant ? "Constant " : "";
  out += type_text(d.type) + " ";
  for (std::size_t i = 0; i < d.vars.size(); ++i) {
    const auto& v = d.vars[i];
    if (i) out += ", ";
    out += v.name + (v.array ? "[]" : "");
    if (v.init) out += " = " + print_expr(*v.init);
  }
  return out + ";";
}

std::string block_text(const BlockStmt& b, int indent) {
  std::string out = pad(indent) + std::string(to_string(b.kind)) + " {\n";
  for (const auto& e : b.items) out += pad(indent + 1) + print_expr(*e) + ";\n";
  return out + pad(indent) + "};\n";
}

std::string stmts_text(const std::vector<StmtPtr>& body, int indent);

std::string stmt_text(const Stmt& s, int indent) {
  const std::string p = pad(indent);
  if (const auto* d = s.as<VarDecl>()) return p + var_decl_text(*d) + "\n";
  if (const auto* a = s.as<Assign>()) return p + print_expr(*a->target) + " = " + print_expr(*a->value) + ";\n";
  if (const auto* e = s.as<ExprStmt>()) return p + print_expr(*e->expr) + ";\n";
  if (const auto* par = s.as<ParallelStmt>()) {
    std::string out = p;
    for (std::size_t i = 0; i < par->branches.size(); ++i) out += (i ? " || " : "") + print_expr(*par->branches[i]);
    return out + ";\n";
  }
  if (const auto* st = s.as<StartStmt>()) {
    std::string out;
    for (const auto& t : st->targets) out += p + expr_at(*t, kPostfix) + ".start();\n";
    return out;
  }
  if (const auto* r = s.as<ReturnStmt>()) return p + "Return" + (r->value ? " " + print_expr(*r->value) : "") + ";\n";
  if (s.is<SkipStmt>()) return p + "Skip;\n";
  if (const auto* b = s.as<BlockStmt>()) return block_text(*b, indent);
  if (const auto* c = s.as<CompositionEntry>()) {
    std::string out = p + c->name + "(";
    for (std::size_t i = 0; i < c->slots.size(); ++i) {
      if (i) out += ", ";
      if (c->slots[i]) out += print_expr(*c->slots[i]);
    }
    return out + ") {\n" + stmts_text(c->body, indent + 1) + p + "};\n";
  }
  return p + ";\n";
}

std::string stmts_text(const std::vector<StmtPtr>& body, int indent) {
  std::string out;
  for (const auto& s : body) out += stmt_text(*s, indent);
  return out;
}

std::string params_text(const std::vector<Param>& params) {
  std::string out = "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ", ";
    out += type_text(params[i].type) + " " + params[i].name;
  }
  return out + ")";
}

std::string method_text(const Method& m, int indent) {
  std::string head = m.return_type ? type_text(*m.return_type) + " " : "";
  return pad(indent) + head + m.name + params_text(m.params) + " {\n" + stmts_text(m.body, indent + 1) + pad(indent) + "}\n";
}

std::string class_body(const ClassDecl& c, int indent) {
  std::string out;
  for (const auto& member : c.members) {
    if (const auto* f = std::get_if<FieldDecl>(&member)) {
      out += pad(indent) + var_decl_text(f->decl) + "\n";
    } else if (const auto* m = std::get_if<Method>(&member)) {
      out += method_text(*m, indent);
    } else if (const auto* b = std::get_if<ClassBlock>(&member)) {
      out += block_text(b->block, indent);
    }
  }
  return out + pad(indent - 1);
}

}  // namespace

std::string print_expr(const Expr& e) { return expr_at(e, 0); }

std::string print_class(const ClassDecl& c) {
  std::string head;
  switch (c.form) {
    case ClassForm::TopLevel: head = "Class"; break;
    case ClassForm::InterfaceImpl:
    case ClassForm::Inheritance: head = c.parent; break;
  }
  return head + " " + c.name + " {\n" + class_body(c, 1) + "}\n";
}

std::string print_unit(const CompilationUnit& unit) {
  std::string out;
  for (std::size_t i = 0; i < unit.classes.size(); ++i) {
    if (i) out += "\n";
    out += print_class(*unit.classes[i]);
  }
  return out;
}

std::string statement_label(const Stmt& s) {
  if (const auto* a = s.as<Assign>()) return print_expr(*a->target) + "=" + print_expr(*a->value);
  if (const auto* d = s.as<VarDecl>()) {
    std::string out = var_decl_text(*d);
    out.pop_back();
    return out;
  }
  std::string text = stmt_text(s, 0);
  while (!text.empty() && (text.back() == '\n' || text.back() == ';')) text.pop_back();
  auto nl = text.find('\n');
  return nl == std::string::npos ? text : text.substr(0, nl);
}

}  // namespace apricot::parse

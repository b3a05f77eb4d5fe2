#include <functional>
#include <map>
#include <set>

#include "apricot/analyzer/analyzer.hpp"
#include "apricot/core/interval.hpp"
#include "apricot/parser/printer.hpp"

namespace apricot::analysis {

using namespace apricot::ast;

namespace {

const SemType kReal = SemType::mathematic(Scalar::Real);
const SemType kInteger = SemType::mathematic(Scalar::Integer);
const SemType kBoolean = SemType::mathematic(Scalar::Boolean);

bool is_assignment_iface(std::optional<BuiltinInterface> i) {
  return i == BuiltinInterface::Assignment || i == BuiltinInterface::ParallelAssignment ||
         i == BuiltinInterface::SequentialAssignment;
}

/// Anonymous class name -> name of the class whose body creates it.
std::map<std::string, std::string> enclosing_classes(const ClassTable& ct) {
  std::map<std::string, std::string> out;
  for (const auto& c : ct.all())
    for_each_expr(*c, [&](const Expr& e) {
      if (const auto* n = e.as<New>(); n && n->anonymous) out[n->anonymous->name] = c->name;
    });
  return out;
}

struct Symbol {
  SemType type = SemType::unknown();
  bool constant = false;
  bool local = false;
};

/// A declared field with its concrete class when the initializer creates an object.
struct FieldInfo {
  std::string name;
  SemType declared = SemType::unknown();
  std::optional<std::string> cls;
  std::optional<BuiltinInterface> iface;
  bool constant = false;
  const VarDeclarator* var = nullptr;
};

SemType declared_type(const ClassTable& ct, const VarDecl& d, const VarDeclarator& v) {
  SemType t = ct.type_of(d.type);
  return v.array && !d.type.array ? SemType::array_of(t) : t;
}

std::optional<BuiltinInterface> iface_of_type(const ClassTable& ct, const SemType& t) {
  if (t.kind() == SemType::Kind::Interface) return t.builtin();
  if (t.kind() == SemType::Kind::Class) return ct.interface_of(t.name());
  return std::nullopt;
}

std::vector<FieldInfo> field_infos(const ClassTable& ct, const std::string& cls) {
  std::vector<FieldInfo> out;
  for (const auto* f : ct.fields(cls))
    for (const auto& v : f->decl.vars) {
      FieldInfo fi;
      fi.name = v.name;
      fi.declared = declared_type(ct, f->decl, v);
      fi.constant = f->decl.constant;
      fi.var = &v;
      if (v.init)
        if (const auto* n = v.init->as<New>()) {
          if (n->anonymous)
            fi.cls = n->anonymous->name;
          else if (ct.contains(n->type_name))
            fi.cls = n->type_name;
        }
      fi.iface = fi.cls ? ct.interface_of(*fi.cls) : iface_of_type(ct, fi.declared);
      out.push_back(std::move(fi));
    }
  return out;
}

std::optional<FieldInfo> find_field(const ClassTable& ct, const std::string& cls, const std::string& name) {
  for (auto& f : field_infos(ct, cls))
    if (f.name == name) return f;
  return std::nullopt;
}

/// Constant folding of interval bounds: literals, signs, arithmetic, Constant fields.
std::optional<Value> fold(const ClassTable& ct, const std::string& cls, const Expr& e, int depth = 0) {
  if (depth > 16) return std::nullopt;
  if (const auto* l = e.as<Literal>()) return l->value.is_number() ? std::optional<Value>(l->value) : std::nullopt;
  if (const auto* u = e.as<Unary>()) {
    auto v = fold(ct, cls, *u->operand, depth + 1);
    if (!v || u->op == UnaryOp::Not) return std::nullopt;
    if (u->op == UnaryOp::Plus) return v;
    if (v->is_inf()) return Value::neg_inf();
    if (v->is_neg_inf()) return Value::inf();
    if (v->is_integer()) return Value::integer(-v->as_integer());
    return Value::real(-v->as_real());
  }
  if (const auto* b = e.as<Binary>()) {
    auto l = fold(ct, cls, *b->lhs, depth + 1);
    auto r = fold(ct, cls, *b->rhs, depth + 1);
    if (!l || !r || !l->is_finite_number() || !r->is_finite_number()) return std::nullopt;
    switch (b->op) {
      case BinaryOp::Add: return Value::real(l->as_real() + r->as_real());
      case BinaryOp::Sub: return Value::real(l->as_real() - r->as_real());
      case BinaryOp::Mul: return Value::real(l->as_real() * r->as_real());
      case BinaryOp::Div:
        if (r->as_real() == 0.0) return std::nullopt;
        return Value::real(l->as_real() / r->as_real());
      default: return std::nullopt;
    }
  }
  if (const auto* n = e.as<Name>()) {
    auto f = find_field(ct, cls, n->id);
    if (f && f->constant && f->var->init) return fold(ct, cls, *f->var->init, depth + 1);
  }
  return std::nullopt;
}

class Checker {
 public:
  Checker(const ClassTable& ct, const eval::ExternalRegistry* ext, Report& out)
      : ct_(ct), ext_(ext), out_(out), enclosing_(enclosing_classes(ct)) {}

  void check_class(const ClassDecl& c) {
    cls_ = c.name;
    for (const auto& m : c.members) {
      if (const auto* f = std::get_if<FieldDecl>(&m)) {
        for (const auto& v : f->decl.vars) {
          if (v.name == "tw") report(v.span, "tw.reserved", "'tw' is the reserved waiting-time clock");
          if (v.init) check_init(declared_type(ct_, f->decl, v), *v.init, v.span);
        }
      } else if (const auto* me = std::get_if<Method>(&m)) {
        check_method(*me);
      } else if (const auto* b = std::get_if<ClassBlock>(&m)) {
        check_block(b->block);
      }
    }
  }

 private:
  void report(Span span, std::string rule, std::string message) {
    out_.push_back(Diagnostic{Severity::Error, std::move(rule), std::move(message), span, {}});
  }

  std::optional<Symbol> lookup(const std::string& name) const {
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it)
      if (auto f = it->find(name); f != it->end()) return f->second;
    return field_symbol(cls_, name);
  }

  std::optional<Symbol> field_symbol(const std::string& cls, const std::string& name) const {
    std::string cur = cls;
    for (int guard = 0; guard < 64; ++guard) {
      if (auto f = find_field(ct_, cur, name)) {
        Symbol s;
        s.type = f->cls ? SemType::class_type(*f->cls) : f->declared;
        s.constant = f->constant;
        return s;
      }
      auto enc = enclosing_.find(cur);
      if (enc == enclosing_.end()) break;
      cur = enc->second;
    }
    if (name == "tw") return Symbol{kReal, false, false};
    return std::nullopt;
  }

  const Method* find_method(const std::string& cls, const std::string& name) const {
    std::string cur = cls;
    for (int guard = 0; guard < 64; ++guard) {
      if (const Method* m = ct_.method(cur, MethodKind::User, name)) return m;
      auto enc = enclosing_.find(cur);
      if (enc == enclosing_.end()) break;
      cur = enc->second;
    }
    return nullptr;
  }

  bool assignable(const SemType& to, const SemType& from) const {
    if (to.is_unknown() || from.is_unknown() || from.kind() == SemType::Kind::Null) return true;
    return is_subtype(from, to, ct_.parent_lookup());
  }

  void check_init(const SemType& declared, const Expr& init, Span span) {
    if (init.is<SkipExpr>()) {
      if (!is_assignment_iface(iface_of_type(ct_, declared)) && !declared.is_unknown())
        report(span, "type.mismatch", "Skip initializes only Assignment variables");
      return;
    }
    if (const auto* arr = init.as<ArrayLit>()) {
      SemType elem = declared.kind() == SemType::Kind::Array ? declared.element() : SemType::unknown();
      if (declared.kind() != SemType::Kind::Array && !declared.is_unknown())
        report(span, "type.mismatch", "array literal assigned to " + declared.to_string());
      for (const auto& e : arr->elems) {
        SemType t = type_of(*e);
        if (!assignable(elem, t)) report(e->span, "type.mismatch", "cannot store " + t.to_string() + " in " + elem.to_string());
      }
      return;
    }
    SemType t = type_of(init);
    if (!assignable(declared, t))
      report(span, "type.mismatch", "cannot assign " + t.to_string() + " to " + declared.to_string());
  }

  void check_method(const Method& m) {
    method_ = &m;
    frames_.clear();
    frames_.emplace_back();
    for (const auto& p : m.params) {
      if (p.name == "tw") report(p.span, "tw.reserved", "'tw' is the reserved waiting-time clock");
      frames_.back()[p.name] = Symbol{ct_.type_of(p.type), false, true};
      if (ct_.type_of(p.type).is_unknown()) report(p.type.span, "class.unknown", "unknown type '" + p.type.name + "'");
    }
    for (const auto& s : m.body) check_stmt(*s);
    frames_.clear();
    method_ = nullptr;
  }

  void check_block(const BlockStmt& b) {
    for (const auto& item : b.items) {
      SemType t = type_of(*item);
      if (!t.is_unknown() && !t.is_boolean())
        report(item->span, "type.mismatch", std::string(to_string(b.kind)) + " entries must be Boolean");
    }
  }

  void check_equation(const Stmt& s, const Expr& e) {
    const auto* b = e.as<Binary>();
    if (!b || b->op != BinaryOp::Eq || !b->lhs->is<Dot>()) {
      report(s.span, "continuous.equation", "Continuous() holds equations of the form dot(v,n) == e");
      type_of(e);
      return;
    }
    const auto* d = b->lhs->as<Dot>();
    SemType vt = type_of(*d->var);
    if (!vt.is_unknown() && !vt.is_numeric()) report(d->var->span, "type.mismatch", "dot() applies to numeric variables");
    if (d->wrt) type_of(*d->wrt);
    SemType rt = type_of(*b->rhs);
    if (!rt.is_unknown() && !rt.is_numeric()) report(b->rhs->span, "type.mismatch", "equation right-hand side must be numeric");
  }

  void check_stmt(const Stmt& s) {
    if (const auto* d = s.as<VarDecl>()) {
      for (const auto& v : d->vars) {
        if (v.name == "tw") report(v.span, "tw.reserved", "'tw' is the reserved waiting-time clock");
        if (frames_.back().count(v.name))
          report(v.span, "declaration.duplicate", "'" + v.name + "' is already declared in this scope");
        SemType t = declared_type(ct_, *d, v);
        if (v.init) check_init(t, *v.init, v.span);
        if (v.init)
          if (const auto* n = v.init->as<New>())
            t = SemType::class_type(n->anonymous ? n->anonymous->name : n->type_name);
        frames_.back()[v.name] = Symbol{t, d->constant, true};
      }
      return;
    }
    if (const auto* a = s.as<Assign>()) {
      const Expr& lhs = *a->target;
      if (!(lhs.is<Name>() || lhs.is<Member>() || lhs.is<Index>() || lhs.is<Dot>())) {
        report(lhs.span, "assign.target", "left-hand side is not assignable");
        return;
      }
      std::optional<Symbol> target_sym;
      if (const auto* n = lhs.as<Name>()) target_sym = lookup(n->id);
      if (const auto* m = lhs.as<Member>()) {
        SemType ot = type_of(*m->object);
        if (ot.kind() == SemType::Kind::Class) target_sym = field_symbol(ot.name(), m->member);
      }
      if (target_sym && target_sym->constant)
        report(lhs.span, "constant.reassign", "'" + parse::print_expr(lhs) + "' is Constant");
      SemType lt = type_of(lhs);
      check_init(lt, *a->value, a->value->span);
      return;
    }
    if (const auto* e = s.as<ExprStmt>()) {
      if (method_ && method_->kind == MethodKind::Continuous)
        check_equation(s, *e->expr);
      else
        type_of(*e->expr);
      return;
    }
    if (const auto* p = s.as<ParallelStmt>()) {
      for (const auto& b : p->branches) {
        if (const auto* m = b->as<Member>()) {
          SemType ot = type_of(*m->object);
          if (ot.kind() == SemType::Kind::Class && !field_symbol(ot.name(), m->member)) continue;  // composition name
        }
        type_of(*b);
      }
      return;
    }
    if (const auto* st = s.as<StartStmt>()) {
      if (!method_ || method_->kind != MethodKind::Init)
        report(s.span, "start.outside-init", "start() may only appear in Init()");
      for (const auto& t : st->targets) type_of(*t);
      return;
    }
    if (const auto* r = s.as<ReturnStmt>()) {
      if (r->value) type_of(*r->value);
      return;
    }
    if (const auto* b = s.as<BlockStmt>()) {
      check_block(*b);
      return;
    }
    if (const auto* c = s.as<CompositionEntry>()) {
      for (const auto& b : c->body)
        if (const auto* blk = b->as<BlockStmt>()) check_block(*blk);
      return;
    }
  }

  SemType numeric_result(const SemType& a, const SemType& b, BinaryOp op) const {
    if (a.is_unknown() || b.is_unknown()) return kReal;
    if (op != BinaryOp::Div && a.scalar() == Scalar::Integer && b.scalar() == Scalar::Integer) return kInteger;
    return kReal;
  }

  SemType type_of(const Expr& e) {
    if (const auto* l = e.as<Literal>()) {
      const Value& v = l->value;
      if (v.is_integer()) return kInteger;
      if (v.is_boolean()) return kBoolean;
      if (v.is_null()) return SemType::null_type();
      return kReal;
    }
    if (const auto* n = e.as<Name>()) {
      if (auto s = lookup(n->id)) return s->type;
      report(e.span, "name.unknown", "unknown name '" + n->id + "'");
      return SemType::unknown();
    }
    if (e.is<This>()) return SemType::class_type(cls_);
    if (e.is<SkipExpr>()) return SemType::null_type();
    if (const auto* m = e.as<Member>()) {
      SemType ot = type_of(*m->object);
      if (ot.is_unknown() || ot.kind() == SemType::Kind::Interface) return SemType::unknown();
      if (ot.kind() != SemType::Kind::Class) {
        report(e.span, "type.mismatch", "'" + parse::print_expr(*m->object) + "' has no members");
        return SemType::unknown();
      }
      if (auto s = field_symbol(ot.name(), m->member)) return s->type;
      report(e.span, "name.unknown", "class '" + ot.name() + "' has no field '" + m->member + "'");
      return SemType::unknown();
    }
    if (const auto* ix = e.as<Index>()) {
      SemType at = type_of(*ix->array);
      SemType it = type_of(*ix->index);
      if (!it.is_unknown() && !it.is_numeric()) report(ix->index->span, "type.mismatch", "array index must be numeric");
      if (at.kind() == SemType::Kind::Array) return at.element();
      if (!at.is_unknown()) report(e.span, "type.mismatch", "indexing a non-array value");
      return SemType::unknown();
    }
    if (const auto* u = e.as<Unary>()) {
      SemType t = type_of(*u->operand);
      if (u->op == UnaryOp::Not) {
        if (!t.is_unknown() && !t.is_boolean()) report(e.span, "type.mismatch", "'!' needs a Boolean operand");
        return kBoolean;
      }
      if (!t.is_unknown() && !t.is_numeric()) report(e.span, "type.mismatch", "sign operator needs a number");
      return t.is_unknown() ? kReal : t;
    }
    if (const auto* b = e.as<Binary>()) {
      SemType l = type_of(*b->lhs);
      SemType r = type_of(*b->rhs);
      auto num = [](const SemType& t) { return t.is_unknown() || t.is_numeric(); };
      auto boo = [](const SemType& t) { return t.is_unknown() || t.is_boolean(); };
      switch (b->op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div:
          if (!num(l) || !num(r)) report(e.span, "type.mismatch", "arithmetic on non-numeric operands");
          return numeric_result(l, r, b->op);
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
          if (!num(l) || !num(r)) report(e.span, "type.mismatch", "ordering of non-numeric operands");
          return kBoolean;
        case BinaryOp::Eq:
        case BinaryOp::Ne: {
          const bool ok = (num(l) && num(r)) || (boo(l) && boo(r)) || l.kind() == SemType::Kind::Null ||
                          r.kind() == SemType::Kind::Null || (l.is_reference() && r.is_reference());
          if (!ok) report(e.span, "type.mismatch", "comparing " + l.to_string() + " with " + r.to_string());
          return kBoolean;
        }
        case BinaryOp::And:
        case BinaryOp::Or:
        case BinaryOp::Xor:
          if (!boo(l) || !boo(r)) report(e.span, "type.mismatch", "logical operator on non-Boolean operands");
          return kBoolean;
      }
    }
    if (const auto* in = e.as<In>()) {
      SemType v = type_of(*in->value);
      if (!v.is_unknown() && !v.is_numeric()) report(e.span, "type.mismatch", "'in' needs a numeric value");
      for (const auto* bound : {in->interval.lo.get(), in->interval.hi.get()}) {
        SemType bt = type_of(*bound);
        if (!bt.is_unknown() && !bt.is_numeric()) report(bound->span, "type.mismatch", "interval bounds must be numeric");
      }
      auto lo = fold(ct_, cls_, *in->interval.lo);
      auto hi = fold(ct_, cls_, *in->interval.hi);
      if (lo && hi) {
        Interval iv{*lo, *hi, in->interval.lo_open, in->interval.hi_open};
        if (auto why = iv.validate()) report(e.span, "interval.invalid", "invalid interval: " + *why);
      }
      return kBoolean;
    }
    if (const auto* c = e.as<Call>()) return type_call(e, *c);
    if (const auto* d = e.as<Dot>()) {
      SemType t = type_of(*d->var);
      if (!t.is_unknown() && !t.is_numeric()) report(e.span, "type.mismatch", "dot() applies to numeric variables");
      if (d->wrt) type_of(*d->wrt);
      return kReal;
    }
    if (const auto* a = e.as<ArrayLit>()) {
      SemType elem = SemType::unknown();
      for (const auto& x : a->elems) {
        SemType t = type_of(*x);
        if (elem.is_unknown()) elem = t;
      }
      return SemType::array_of(elem);
    }
    if (const auto* n = e.as<New>()) {
      for (const auto& a : n->args) type_of(*a);
      if (n->anonymous) {
        std::string saved = cls_;
        auto saved_frames = frames_;
        const Method* saved_method = method_;
        check_class(*n->anonymous);
        cls_ = saved;
        frames_ = std::move(saved_frames);
        method_ = saved_method;
        return SemType::class_type(n->anonymous->name);
      }
      if (!ct_.contains(n->type_name)) {
        report(e.span, "class.unknown", "cannot instantiate '" + n->type_name + "'");
        return SemType::unknown();
      }
      auto ctors = ct_.constructors(n->type_name);
      bool match = ctors.empty() && n->args.empty();
      for (const auto* c : ctors) match = match || c->params.size() == n->args.size();
      if (!match)
        report(e.span, "arity.mismatch",
               "no constructor of '" + n->type_name + "' takes " + std::to_string(n->args.size()) + " arguments");
      return SemType::class_type(n->type_name);
    }
    return SemType::unknown();
  }

  SemType type_call(const Expr& e, const Call& c) {
    std::vector<SemType> args;
    for (const auto& a : c.args) args.push_back(type_of(*a));
    auto arity_error = [&](std::size_t expected) {
      report(e.span, "arity.mismatch",
             c.name + " expects " + std::to_string(expected) + " arguments, got " + std::to_string(c.args.size()));
    };
    if (c.target) {
      SemType ot = type_of(*c.target);
      if (ot.kind() != SemType::Kind::Class) return SemType::unknown();
      if (const Method* m = find_method(ot.name(), c.name)) {
        if (m->params.size() != c.args.size()) arity_error(m->params.size());
        return SemType::unknown();
      }
      report(e.span, "name.unknown", "class '" + ot.name() + "' has no method '" + c.name + "'");
      return SemType::unknown();
    }
    if (const auto* b = eval::find_builtin(c.name)) {
      if (c.args.size() < b->min_arity || c.args.size() > b->max_arity)
        report(e.span, "arity.mismatch", c.name + ": wrong number of arguments");
      for (std::size_t i = 0; i < args.size(); ++i)
        if (!args[i].is_unknown() && !args[i].is_numeric())
          report(c.args[i]->span, "type.mismatch", c.name + " needs numeric arguments");
      if (b->result == eval::BuiltinResult::Integer) return kInteger;
      if (b->result == eval::BuiltinResult::LikeArgs) {
        bool all_int = !args.empty();
        for (const auto& a : args) all_int = all_int && !a.is_unknown() && a.scalar() == Scalar::Integer;
        return all_int ? kInteger : kReal;
      }
      return kReal;
    }
    if (const Method* m = find_method(cls_, c.name)) {
      if (m->params.size() != c.args.size()) arity_error(m->params.size());
      return SemType::unknown();
    }
    if (ext_)
      if (const auto* x = ext_->find(c.name)) {
        if (x->arity != c.args.size()) arity_error(x->arity);
        return SemType::unknown();
      }
    report(e.span, "function.unbound", "function '" + c.name + "' is neither built-in nor bound (use --define)");
    return SemType::unknown();
  }

  const ClassTable& ct_;
  const eval::ExternalRegistry* ext_;
  Report& out_;
  std::map<std::string, std::string> enclosing_;
  std::string cls_;
  const Method* method_ = nullptr;
  std::vector<std::map<std::string, Symbol>> frames_;
};

// ---- conformance ---------------------------------------------------------

class Conformance {
 public:
  Conformance(const ClassTable& ct, Report& out) : ct_(ct), out_(out) {}

  void check(const ClassDecl& c) {
    check_hierarchy(c);
    check_blocks(c);
    auto iface = ct_.interface_of(c.name);
    if (!iface) return;
    switch (*iface) {
      case BuiltinInterface::System: check_system(c); break;
      case BuiltinInterface::Plant:
      case BuiltinInterface::Controller: check_component(c, *iface); break;
      case BuiltinInterface::Dynamic: check_dynamic(c); break;
      default:
        if (!ct_.method(c.name, MethodKind::Discrete))
          report(c.span, "discrete.missing", "Assignment class '" + c.name + "' has no Discrete()");
    }
  }

 private:
  void report(Span span, std::string rule, std::string message) {
    out_.push_back(Diagnostic{Severity::Error, std::move(rule), std::move(message), span, {}});
  }

  void check_hierarchy(const ClassDecl& c) {
    if (!c.parent.empty() && !builtin_interface_from(c.parent) && !ct_.contains(c.parent))
      report(c.span, "class.unknown", "'" + c.name + "' extends unknown class '" + c.parent + "'");
    if (ct_.cyclic(c.name)) report(c.span, "class.cycle", "cyclic inheritance through '" + c.name + "'");
  }

  void check_blocks(const ClassDecl& c) {
    const bool dynamic = ct_.interface_of(c.name) == BuiltinInterface::Dynamic;
    for (const auto* b : c.blocks()) {
      if (b->block.kind == BlockKind::Condition)
        report(b->span, "block.misplaced", "Condition blocks belong inside composition entries");
      else if (!dynamic)
        report(b->span, "block.misplaced", "Invariant blocks belong to Dynamic classes");
    }
    for (const auto& m : c.members) {
      const auto* me = std::get_if<Method>(&m);
      if (!me) continue;
      for (const auto& s : me->body) {
        if (const auto* b = s->as<BlockStmt>())
          report(s->span, "block.misplaced", std::string(to_string(b->kind)) + " block inside a method body");
        if (const auto* e = s->as<CompositionEntry>())
          for (const auto& inner : e->body) {
            const auto* b = inner->as<BlockStmt>();
            if (!b || b->kind != BlockKind::Condition)
              report(inner->span, "block.misplaced", "composition entries contain only a Condition block");
          }
      }
    }
  }

  void check_dynamic(const ClassDecl& c) {
    if (!ct_.method(c.name, MethodKind::Continuous))
      report(c.span, "dynamic.continuous-missing", "Dynamic '" + c.name + "' has no Continuous()");
    if (!c.anonymous && ct_.invariants(c.name).empty())
      report(c.span, "dynamic.invariant-missing", "Dynamic '" + c.name + "' has no Invariant block");
  }

  void check_component(const ClassDecl& c, BuiltinInterface iface) {
    auto fields = field_infos(ct_, c.name);
    int dynamics = 0, assignments = 0, systems = 0;
    std::map<std::string, FieldInfo> by_name;
    for (const auto& f : fields) {
      by_name[f.name] = f;
      if (f.iface == BuiltinInterface::Dynamic) ++dynamics;
      if (is_assignment_iface(f.iface)) ++assignments;
      if (f.iface == BuiltinInterface::System) ++systems;
    }
    const std::string what = iface == BuiltinInterface::Plant ? "Plant" : "Controller";
    if (dynamics == 0) report(c.span, "cardinality.dynamics", what + " '" + c.name + "' declares no Dynamic");
    if (assignments == 0) report(c.span, "cardinality.assignments", what + " '" + c.name + "' declares no Assignment");
    if (iface == BuiltinInterface::Plant && systems > 1)
      report(c.span, "cardinality.subsystem", "a Plant owns at most one subsystem");
    if (iface == BuiltinInterface::Controller && systems > 0)
      report(c.span, "cardinality.subsystem", "a Controller cannot own a subsystem");
    auto entries = ct_.compositions(c.name);
    if (entries.empty()) report(c.span, "cardinality.compositions", what + " '" + c.name + "' has no composition entry");
    for (const auto* e : entries) {
      auto endpoint = [&](const ExprPtr& slot, bool action) {
        if (!slot || slot->is<SkipExpr>()) {
          if (!action) report(c.span, "composition.endpoint", e->name + ": missing dynamic endpoint");
          return;
        }
        const auto* n = slot->as<Name>();
        auto f = n ? by_name.find(n->id) : by_name.end();
        bool ok = f != by_name.end();
        if (ok && action) ok = is_assignment_iface(f->second.iface);
        if (ok && !action)
          ok = f->second.iface == BuiltinInterface::Dynamic ||
               (iface == BuiltinInterface::Plant && f->second.iface == BuiltinInterface::System);
        if (!ok)
          report(slot->span, "composition.endpoint",
                 e->name + ": '" + parse::print_expr(*slot) + "' is not " +
                     (action ? "an Assignment" : "a Dynamic") + " of '" + c.name + "'");
      };
      if (e->slots.size() != 3) continue;  // reported by the parser
      endpoint(e->slots[0], false);
      endpoint(e->slots[1], true);
      endpoint(e->slots[2], false);
    }
    if (iface == BuiltinInterface::Controller)
      for (auto& d : check_clock_constraint(ct_, c.name)) out_.push_back(std::move(d));
  }

  void check_system(const ClassDecl& c) {
    auto fields = field_infos(ct_, c.name);
    std::map<std::string, FieldInfo> components;
    int plants = 0, controllers = 0;
    for (const auto& f : fields) {
      if (f.iface == BuiltinInterface::Plant) ++plants;
      if (f.iface == BuiltinInterface::Controller) ++controllers;
      if (f.iface == BuiltinInterface::Plant || f.iface == BuiltinInterface::Controller) components[f.name] = f;
    }
    if (plants == 0) report(c.span, "cardinality.plants", "System '" + c.name + "' has no Plant");
    if (controllers == 0) report(c.span, "cardinality.controllers", "System '" + c.name + "' has no Controller");

    const Method* init = ct_.method(c.name, MethodKind::Init);
    if (!init) {
      report(c.span, "init.missing", "System '" + c.name + "' has no Init()");
    } else {
      std::map<std::string, int> starts;
      for (const auto& s : init->body) {
        const auto* st = s->as<StartStmt>();
        if (!st) continue;
        for (const auto& t : st->targets) check_start(*t, components, starts);
      }
      for (const auto& [name, f] : components)
        if (!starts.count(name))
          report(init->span, "init.missing-start", "Init() starts no dynamic of component '" + name + "'");
    }

    for (const auto& m : c.members) {
      const auto* me = std::get_if<Method>(&m);
      if (!me) continue;
      for (const auto& s : me->body) {
        const auto* p = s->as<ParallelStmt>();
        if (!p) continue;
        for (const auto& b : p->branches) {
          const auto* mem = b->as<Member>();
          const auto* owner = mem ? mem->object->as<Name>() : nullptr;
          if (!owner) continue;
          auto comp = components.find(owner->id);
          if (comp == components.end() || !comp->second.cls) continue;
          if (find_field(ct_, *comp->second.cls, mem->member)) continue;
          bool found = false;
          for (const auto* e : ct_.compositions(*comp->second.cls)) found = found || e->name == mem->member;
          if (!found)
            report(b->span, "sync.missing-composition",
                   "'" + owner->id + "' has no composition '" + mem->member + "'");
        }
      }
    }
  }

  void check_start(const Expr& t, const std::map<std::string, FieldInfo>& components, std::map<std::string, int>& starts) {
    const auto* mem = t.as<Member>();
    const auto* owner = mem ? mem->object->as<Name>() : nullptr;
    if (!owner) {
      report(t.span, "start.non-dynamic", "start() target must name component.dynamic");
      return;
    }
    auto comp = components.find(owner->id);
    if (comp == components.end()) {
      report(t.span, "start.non-dynamic", "'" + owner->id + "' is not a Plant or Controller");
      return;
    }
    std::optional<FieldInfo> dyn;
    if (comp->second.cls) dyn = find_field(ct_, *comp->second.cls, mem->member);
    if (!dyn || dyn->iface != BuiltinInterface::Dynamic) {
      report(t.span, "start.non-dynamic", "'" + parse::print_expr(t) + "' is not a Dynamic");
      return;
    }
    if (++starts[owner->id] == 2)
      report(t.span, "init.multiple-starts", "component '" + owner->id + "' is started more than once");
  }

  const ClassTable& ct_;
  Report& out_;
};

bool is_literal_one(const Expr& e) {
  const auto* l = e.as<Literal>();
  if (!l) return false;
  if (l->value.is_integer()) return l->value.as_integer() == 1;
  return l->value.is_real() && l->value.as_real() == 1.0;
}

}  // namespace

Report resolve_and_typecheck(const ClassTable& classes, const eval::ExternalRegistry* externals) {
  Report out;
  Checker checker(classes, externals, out);
  for (const auto& c : classes.top_level()) checker.check_class(*c);
  return out;
}

Report check_interface_conformance(const ClassTable& classes) {
  Report out;
  Conformance conf(classes, out);
  for (const auto& c : classes.all()) conf.check(*c);
  return out;
}

Report check_clock_constraint(const ClassTable& classes, const std::string& controller) {
  Report out;
  for (const auto& f : field_infos(classes, controller)) {
    if (f.iface != BuiltinInterface::Dynamic || !f.cls) continue;
    const Method* cont = classes.method(*f.cls, MethodKind::Continuous);
    if (!cont) continue;
    for (const auto& s : cont->body) {
      const auto* es = s->as<ExprStmt>();
      const auto* b = es ? es->expr->as<Binary>() : nullptr;
      const auto* d = b && b->op == BinaryOp::Eq ? b->lhs->as<Dot>() : nullptr;
      if (d && d->order == 1 && !d->wrt && is_literal_one(*b->rhs)) continue;
      out.push_back(Diagnostic{Severity::Error, "clock.constraint",
                               "controller dynamic '" + f.name + "' must use clock equations dot(x,1) == 1", s->span, {}});
    }
  }
  return out;
}

std::vector<std::string> system_classes(const ClassTable& classes) {
  std::vector<std::string> out;
  for (const auto& c : classes.top_level())
    if (classes.interface_of(c->name) == BuiltinInterface::System) out.push_back(c->name);
  return out;
}

Analysis analyze(const CompilationUnit& unit, const eval::ExternalRegistry* externals) {
  Analysis a;
  ClassTable raw(unit);
  a.diagnostics = resolve_and_typecheck(raw, externals);
  for (auto& d : check_interface_conformance(raw)) a.diagnostics.push_back(std::move(d));
  std::stable_sort(a.diagnostics.begin(), a.diagnostics.end(),
                   [](const Diagnostic& x, const Diagnostic& y) { return x.span < y.span; });
  a.normalized = normalize_dbc(unit);
  a.classes = std::make_shared<const ClassTable>(a.normalized);
  return a;
}

}  // namespace apricot::analysis

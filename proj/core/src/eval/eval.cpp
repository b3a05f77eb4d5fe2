#include "apricot/eval/eval.hpp"

#include <cmath>
#include <limits>

namespace apricot::eval {

using namespace apricot::ast;

std::string_view rule_id(ErrorKind k) {
  switch (k) {
    case ErrorKind::DivisionByZero: return "eval.division-by-zero";
    case ErrorKind::NullOperand: return "eval.null-operand";
    case ErrorKind::DomainError: return "eval.domain";
    case ErrorKind::UnknownFunction: return "eval.unknown-function";
    case ErrorKind::ArityMismatch: return "eval.arity";
    case ErrorKind::InfArithmetic: return "eval.inf-arithmetic";
    case ErrorKind::TypeMismatch: return "eval.type";
    case ErrorKind::UnknownName: return "eval.unknown-name";
    case ErrorKind::NumericOverflow: return "eval.numeric-overflow";
  }
  return "eval";
}

// ---- external registry ----------------------------------------------------

void ExternalRegistry::define(const std::string& name, std::size_t arity, Callback fn, std::string text) {
  entries_[name] = Entry{arity, std::move(fn), std::move(text)};
}

void ExternalRegistry::define_expression(const std::string& name, std::vector<std::string> params, ExprPtr body,
                                         std::string text) {
  std::size_t arity = params.size();
  define(
      name, arity,
      [params = std::move(params), body](const std::vector<Value>& args, EvalContext& caller) {
        std::map<std::string, Value> bound;
        if (caller.overlay) bound = *caller.overlay;
        for (std::size_t i = 0; i < params.size(); ++i) bound[params[i]] = args[i];
        EvalContext inner = caller;
        inner.overlay = &bound;
        return eval_expr(*body, inner);
      },
      std::move(text));
}

const ExternalRegistry::Entry* ExternalRegistry::find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> ExternalRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : entries_) out.push_back(n);
  return out;
}

// ---- helpers ----------------------------------------------------------------

double numeric(const Value& v, Span span) {
  if (v.is_null()) throw EvalError(ErrorKind::NullOperand, "null operand in arithmetic", span);
  if (v.is_infinite()) throw EvalError(ErrorKind::InfArithmetic, "Inf used in arithmetic", span);
  if (!v.is_finite_number()) throw EvalError(ErrorKind::TypeMismatch, "numeric operand expected, got " + v.to_string(), span);
  return v.as_real();
}

namespace {

bool boolean(const Value& v, Span span) {
  if (v.is_null()) throw EvalError(ErrorKind::NullOperand, "null operand in boolean expression", span);
  if (!v.is_boolean()) throw EvalError(ErrorKind::TypeMismatch, "Boolean operand expected, got " + v.to_string(), span);
  return v.as_boolean();
}

Value checked_real(double r, Span span) {
  if (!std::isfinite(r)) throw EvalError(ErrorKind::NumericOverflow, "arithmetic result is not finite", span);
  return Value::real(r);
}

Value arithmetic(BinaryOp op, const Value& a, const Value& b, Span span) {
  double x = numeric(a, span), y = numeric(b, span);
  if (a.is_integer() && b.is_integer() && op != BinaryOp::Div) {
    std::int64_t i = a.as_integer(), j = b.as_integer(), out = 0;
    bool overflow = false;
    switch (op) {
      case BinaryOp::Add: overflow = __builtin_add_overflow(i, j, &out); break;
      case BinaryOp::Sub: overflow = __builtin_sub_overflow(i, j, &out); break;
      case BinaryOp::Mul: overflow = __builtin_mul_overflow(i, j, &out); break;
      default: break;
    }
    if (overflow) throw EvalError(ErrorKind::NumericOverflow, "integer overflow", span);
    return Value::integer(out);
  }
  switch (op) {
    case BinaryOp::Add: return checked_real(x + y, span);
    case BinaryOp::Sub: return checked_real(x - y, span);
    case BinaryOp::Mul: return checked_real(x * y, span);
    case BinaryOp::Div:
      if (y == 0) throw EvalError(ErrorKind::DivisionByZero, "division by zero", span);
      return checked_real(x / y, span);
    default: break;
  }
  throw EvalError(ErrorKind::TypeMismatch, "not an arithmetic operator", span);
}

Value compare(BinaryOp op, const Value& a, const Value& b, Span span) {
  if (a.is_null() || b.is_null()) throw EvalError(ErrorKind::NullOperand, "null operand in comparison", span);
  int c = 0;
  if (a.is_number() && b.is_number()) {
    c = compare_numbers(a, b);
  } else if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
    bool same_kind = (a.is_boolean() && b.is_boolean()) || (a.is_ref() && b.is_ref()) || (a.is_array() && b.is_array());
    if (!same_kind) throw EvalError(ErrorKind::TypeMismatch, "cannot compare " + a.to_string() + " with " + b.to_string(), span);
    c = a == b ? 0 : 1;
  } else {
    throw EvalError(ErrorKind::TypeMismatch, "ordering comparison needs numbers", span);
  }
  switch (op) {
    case BinaryOp::Eq: return Value::boolean(c == 0);
    case BinaryOp::Ne: return Value::boolean(c != 0);
    case BinaryOp::Lt: return Value::boolean(c < 0);
    case BinaryOp::Le: return Value::boolean(c <= 0);
    case BinaryOp::Gt: return Value::boolean(c > 0);
    case BinaryOp::Ge: return Value::boolean(c >= 0);
    default: break;
  }
  throw EvalError(ErrorKind::TypeMismatch, "not a comparison", span);
}

ObjectId object_of(const Value& v, Span span) {
  if (v.is_null()) throw EvalError(ErrorKind::NullOperand, "member access on null reference", span);
  if (!v.is_ref()) throw EvalError(ErrorKind::TypeMismatch, "member access on non-object " + v.to_string(), span);
  return v.as_ref();
}

Location member_location(ObjectId obj, const std::string& member, const EvalContext& ctx, Span span) {
  if (auto loc = ctx.store->field(obj, member)) return *loc;
  throw EvalError(ErrorKind::UnknownName,
                  "object of class '" + ctx.store->object(obj).class_name + "' has no field '" + member + "'", span);
}

Location index_location(const Value& array, const Value& index, Span span) {
  if (array.is_null()) throw EvalError(ErrorKind::NullOperand, "indexing a null array", span);
  if (!array.is_array()) throw EvalError(ErrorKind::TypeMismatch, "indexing a non-array", span);
  double d = numeric(index, span);
  if (std::trunc(d) != d) throw EvalError(ErrorKind::DomainError, "array index must be an integer", span);
  const auto& elems = array.as_array();
  if (d < 1 || d > static_cast<double>(elems.size()))
    throw EvalError(ErrorKind::DomainError,
                    "array index " + index.to_string() + " outside 1.." + std::to_string(elems.size()), span);
  return elems[static_cast<std::size_t>(d) - 1];
}

Value call(const Call& c, EvalContext& ctx, Span span) {
  if (c.target) {
    ObjectId obj = object_of(eval_expr(*c.target, ctx), span);
    if (!ctx.invoker) throw EvalError(ErrorKind::UnknownFunction, "method calls are unavailable here", span);
    return ctx.invoker->call_method(ctx, obj, c.name, c.args, span);
  }
  if (find_builtin(c.name)) {
    std::vector<Value> args;
    for (const auto& a : c.args) args.push_back(eval_expr(*a, ctx));
    return eval_builtin(c.name, args, span);
  }
  if (ctx.invoker && ctx.invoker->has_method(ctx.self, c.name))
    return ctx.invoker->call_method(ctx, ctx.self, c.name, c.args, span);
  if (ctx.externals) {
    if (const auto* ext = ctx.externals->find(c.name)) {
      if (ext->arity != c.args.size())
        throw EvalError(ErrorKind::ArityMismatch,
                        c.name + " expects " + std::to_string(ext->arity) + " arguments, got " + std::to_string(c.args.size()),
                        span);
      std::vector<Value> args;
      for (const auto& a : c.args) args.push_back(eval_expr(*a, ctx));
      return ext->fn(args, ctx);
    }
  }
  throw EvalError(ErrorKind::UnknownFunction, "unknown function '" + c.name + "'", span);
}

struct Evaluator {
  EvalContext& ctx;
  Span span;

  Value operator()(const Literal& l) const { return l.value; }
  Value operator()(const Name& n) const {
    if (ctx.overlay) {
      if (auto it = ctx.overlay->find(n.id); it != ctx.overlay->end()) return it->second;
    }
    if (auto loc = resolve_name(n.id, ctx)) return ctx.store->read(*loc);
    throw EvalError(ErrorKind::UnknownName, "unknown name '" + n.id + "'", span);
  }
  Value operator()(const This&) const { return Value::ref(ctx.self); }
  Value operator()(const SkipExpr&) const { return Value::null(); }
  Value operator()(const Member& m) const {
    ObjectId obj = object_of(eval_expr(*m.object, ctx), span);
    return ctx.store->read(member_location(obj, m.member, ctx, span));
  }
  Value operator()(const Index& i) const {
    Value arr = eval_expr(*i.array, ctx);
    Value idx = eval_expr(*i.index, ctx);
    return ctx.store->read(index_location(arr, idx, span));
  }
  Value operator()(const Unary& u) const {
    Value v = eval_expr(*u.operand, ctx);
    switch (u.op) {
      case UnaryOp::Not: return Value::boolean(!boolean(v, span));
      case UnaryOp::Plus:
        if (v.is_infinite()) return v;
        numeric(v, span);
        return v;
      case UnaryOp::Minus:
        if (v.is_inf()) return Value::neg_inf();
        if (v.is_neg_inf()) return Value::inf();
        numeric(v, span);
        if (v.is_integer()) {
          if (v.as_integer() == std::numeric_limits<std::int64_t>::min())
            throw EvalError(ErrorKind::NumericOverflow, "integer overflow", span);
          return Value::integer(-v.as_integer());
        }
        return Value::real(-v.as_real());
    }
    return v;
  }
  Value operator()(const Binary& b) const {
    Value l = eval_expr(*b.lhs, ctx);
    Value r = eval_expr(*b.rhs, ctx);
    switch (b.op) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div: return arithmetic(b.op, l, r, span);
      case BinaryOp::And: return Value::boolean(boolean(l, span) & boolean(r, span));
      case BinaryOp::Or: return Value::boolean(boolean(l, span) | boolean(r, span));
      case BinaryOp::Xor: return Value::boolean(boolean(l, span) != boolean(r, span));
      default: return compare(b.op, l, r, span);
    }
  }
  Value operator()(const In& i) const {
    Value v = eval_expr(*i.value, ctx);
    Interval iv = eval_interval(i.interval, ctx);
    return Value::boolean(eval_interval_membership(v, iv, span));
  }
  Value operator()(const Call& c) const { return call(c, ctx, span); }
  Value operator()(const Dot& d) const {
    if (d.wrt)
      throw EvalError(ErrorKind::DomainError, "dot(v,u,n) has no value during simulation", span);
    Location var = eval_lvalue(*d.var, ctx);
    if (auto slot = ctx.store->derivative_slot(var, d.order)) return ctx.store->read(*slot);
    return Value::null();
  }
  Value operator()(const ArrayLit& a) const {
    std::vector<Value> values;
    for (const auto& e : a.elems) values.push_back(eval_expr(*e, ctx));
    std::vector<Location> locs;
    for (auto& v : values) {
      Location l = ctx.store->fresh_location(SemType::unknown());
      ctx.store->write(l, std::move(v));
      locs.push_back(l);
    }
    return Value::array(std::move(locs));
  }
  Value operator()(const New& n) const {
    if (!ctx.invoker) throw EvalError(ErrorKind::UnknownFunction, "object creation is unavailable here", span);
    return ctx.invoker->create_object(ctx, n, span);
  }
};

}  // namespace

std::optional<Location> resolve_name(const std::string& name, const EvalContext& ctx) {
  if (ctx.use_locals) {
    if (auto loc = ctx.store->lookup_local(name)) return loc;
  }
  if (ctx.self.index < ctx.store->object_count()) return ctx.store->field(ctx.self, name);
  return std::nullopt;
}

Value eval_expr(const Expr& e, EvalContext& ctx) { return std::visit(Evaluator{ctx, e.span}, e.node); }

Location eval_lvalue(const Expr& e, EvalContext& ctx) {
  if (const auto* n = e.as<Name>()) {
    if (auto loc = resolve_name(n->id, ctx)) return *loc;
    throw EvalError(ErrorKind::UnknownName, "unknown name '" + n->id + "'", e.span);
  }
  if (const auto* m = e.as<Member>()) {
    ObjectId obj = object_of(eval_expr(*m->object, ctx), e.span);
    return member_location(obj, m->member, ctx, e.span);
  }
  if (const auto* i = e.as<Index>()) {
    Value arr = eval_expr(*i->array, ctx);
    Value idx = eval_expr(*i->index, ctx);
    return index_location(arr, idx, e.span);
  }
  if (const auto* d = e.as<Dot>()) {
    if (d->wrt) throw EvalError(ErrorKind::DomainError, "dot(v,u,n) is not assignable", e.span);
    Location var = eval_lvalue(*d->var, ctx);
    return ctx.store->ensure_derivative_slot(var, d->order);
  }
  throw EvalError(ErrorKind::TypeMismatch, "expression is not assignable", e.span);
}

bool eval_interval_membership(const Value& v, const Interval& i, Span span) {
  if (v.is_null()) throw EvalError(ErrorKind::NullOperand, "null operand in interval membership", span);
  if (!v.is_number()) throw EvalError(ErrorKind::TypeMismatch, "interval membership needs a number", span);
  int lo = compare_numbers(v, i.lo);
  int hi = compare_numbers(v, i.hi);
  bool above = i.lo_open ? lo > 0 : lo >= 0;
  bool below = i.hi_open ? hi < 0 : hi <= 0;
  return above && below;
}

Interval eval_interval(const IntervalExpr& iv, EvalContext& ctx) {
  Interval out{eval_expr(*iv.lo, ctx), eval_expr(*iv.hi, ctx), iv.lo_open, iv.hi_open};
  if (out.lo.is_null() || out.hi.is_null())
    throw EvalError(ErrorKind::NullOperand, "null interval bound", iv.lo ? iv.lo->span : Span{});
  if (auto why = out.validate()) throw EvalError(ErrorKind::DomainError, "invalid interval: " + *why, iv.lo->span);
  return out;
}

namespace {
bool conjunction(const std::vector<ExprPtr>& items, EvalContext& ctx) {
  bool all = true;
  for (const auto& item : items) all = boolean(eval_expr(*item, ctx), item->span) && all;
  return all;
}
}  // namespace

bool eval_invariant(const std::vector<ExprPtr>& items, EvalContext& ctx) { return conjunction(items, ctx); }
bool eval_condition(const std::vector<ExprPtr>& items, EvalContext& ctx) { return conjunction(items, ctx); }

}  // namespace apricot::eval

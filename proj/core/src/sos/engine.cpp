#include "apricot/sos/engine.hpp"

#include <algorithm>
#include <set>

#include "apricot/parser/printer.hpp"

namespace apricot::sos {

using namespace apricot::ast;

std::string call_label(const std::string& name, const std::vector<ExprPtr>& args) {
  std::string out = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ",";
    out += parse::print_expr(*args[i]);
  }
  return out + ")";
}

namespace {

bool lvalue_shaped(const Expr& e) { return e.is<Name>() || e.is<Member>() || e.is<Index>() || e.is<Dot>(); }

Value coerce(const SemType& type, Value v) {
  if (type.is_scalar() && type.scalar() == Scalar::Real && v.is_integer()) return Value::real(static_cast<double>(v.as_integer()));
  return v;
}

}  // namespace

Engine::Engine(const ClassTable& classes, Store& store, const eval::ExternalRegistry* externals)
    : classes_(&classes), store_(&store), externals_(externals) {}

eval::EvalContext Engine::context(ObjectId self, bool use_locals) {
  eval::EvalContext ctx;
  ctx.store = store_;
  ctx.self = self;
  ctx.use_locals = use_locals;
  ctx.externals = externals_;
  ctx.invoker = this;
  return ctx;
}

void Engine::record(const Prefix& prefix, std::string rule, std::vector<StoreWrite> writes) {
  if (log_) log_->push_back(StepRecord{prefix, std::move(rule), std::move(writes), time_});
}

void Engine::write(Location loc, Value v, Span span, std::vector<StoreWrite>& writes) {
  const Cell& c = store_->cell(loc);
  if (c.constant) throw SosError("constant.reassign", "assignment to a Constant location", span);
  v = coerce(c.type, std::move(v));
  writes.push_back(StoreWrite{store_->resolve(loc), c.value, v});
  store_->write(loc, std::move(v));
}

void Engine::exec_single_assignment(const Expr& lhs, const Expr& rhs, eval::EvalContext& ctx, const Prefix& prefix) {
  Value v = eval::eval_expr(rhs, ctx);
  Location loc = eval::eval_lvalue(lhs, ctx);
  std::vector<StoreWrite> writes;
  write(loc, std::move(v), lhs.span, writes);
  record(prefix.extend(parse::print_expr(lhs) + "=" + parse::print_expr(rhs)), "assign-single", std::move(writes));
}

void Engine::exec_discrete(const std::vector<StmtPtr>& body, DiscreteMode mode, eval::EvalContext& ctx,
                           const Prefix& prefix) {
  std::vector<const Assign*> assigns;
  for (const auto& s : body) {
    if (s->is<SkipStmt>()) continue;
    const auto* a = s->as<Assign>();
    if (!a) throw SosError("discrete.statement", "Discrete bodies may only contain assignments", s->span);
    assigns.push_back(a);
  }
  if (mode == DiscreteMode::Sequential) {
    for (const auto* a : assigns) exec_single_assignment(*a->target, *a->value, ctx, prefix);
    return;
  }
  struct Pending {
    Location loc;
    Value value;
    Span span;
  };
  std::vector<Pending> pending;
  std::set<std::uint32_t> targets;
  for (const auto* a : assigns) {
    Value v = eval::eval_expr(*a->value, ctx);
    Location loc = eval::eval_lvalue(*a->target, ctx);
    if (!targets.insert(store_->resolve(loc).index).second)
      throw SosError("write-conflict", "parallel assignments write '" + parse::print_expr(*a->target) + "' twice",
                     a->target->span);
    pending.push_back({loc, std::move(v), a->target->span});
  }
  std::vector<StoreWrite> writes;
  for (auto& p : pending) write(p.loc, std::move(p.value), p.span, writes);
  std::string label;
  for (const auto* a : assigns) label += (label.empty() ? "" : "||") + parse::print_expr(*a->target) + "=" + parse::print_expr(*a->value);
  record(prefix.extend(label), "assign-parallel", std::move(writes));
}

Value Engine::initial_value(const ExprPtr& init, const SemType& declared, eval::EvalContext& ctx, SemType& recorded) {
  recorded = declared;
  if (!init || init->is<SkipExpr>()) return Value::null();
  if (const auto* arr = init->as<ArrayLit>()) {
    SemType elem = declared.kind() == SemType::Kind::Array ? declared.element() : SemType::unknown();
    std::vector<Value> values;
    for (const auto& e : arr->elems) values.push_back(eval::eval_expr(*e, ctx));
    std::vector<Location> locs;
    for (auto& v : values) {
      Location l = store_->fresh_location(elem);
      store_->write(l, coerce(elem, std::move(v)));
      locs.push_back(l);
    }
    return Value::array(std::move(locs));
  }
  Value v = eval::eval_expr(*init, ctx);
  if (v.is_ref() && init->is<New>()) {
    const std::string& cls = store_->object(v.as_ref()).class_name;
    if (!init->as<New>()->anonymous) recorded = SemType::class_type(cls);
  }
  return coerce(declared, std::move(v));
}

void Engine::declare_variable(const VarDecl& decl, eval::EvalContext& ctx, bool instance, const Prefix& prefix) {
  for (const auto& var : decl.vars) {
    SemType declared = classes_->type_of(decl.type);
    if (var.array && !decl.type.array) declared = SemType::array_of(declared);
    std::optional<Location> loc;
    if (instance) {
      loc = store_->own_field(ctx.self, var.name);
      if (!loc) {
        loc = store_->fresh_location(declared);
        store_->add_field(ctx.self, var.name, *loc);
      }
    } else {
      if (store_->frame_depth() > 0 && store_->top_frame().names.count(var.name))
        throw SosError("declaration.duplicate", "'" + var.name + "' is already declared in this scope", var.span);
      loc = store_->fresh_location(declared);
      store_->bind_alias(var.name, *loc);
    }
    SemType recorded = declared;
    Value v = initial_value(var.init, declared, ctx, recorded);
    store_->set_type(*loc, recorded);
    std::vector<StoreWrite> writes;
    if (!v.is_null() || store_->cell(*loc).value.is_null()) {
      const Value before = store_->read(*loc);
      writes.push_back(StoreWrite{store_->resolve(*loc), before, v});
      store_->write(*loc, std::move(v));
    }
    if (decl.constant) store_->set_constant(*loc, true);
    std::string label = decl.type.name + " " + var.name + (var.init ? "=" + parse::print_expr(*var.init) : "");
    record(prefix.extend(label), "declare", std::move(writes));
  }
}

Value Engine::invoke_method(const Prefix& prefix, ObjectId target, const Method& m, const std::vector<ExprPtr>& args,
                            eval::EvalContext& caller, Span span) {
  if (depth_ >= frame_limit_)
    throw SosError("frame-limit", "method nesting exceeds the frame limit of " + std::to_string(frame_limit_), span);
  if (args.size() != m.params.size())
    throw SosError("arity.mismatch",
                   m.name + " expects " + std::to_string(m.params.size()) + " arguments, got " + std::to_string(args.size()),
                   span);

  // Bind arguments in the caller's scope: primitives copy, the rest pass by name.
  std::vector<Location> bound;
  std::vector<StoreWrite> writes;
  for (std::size_t i = 0; i < args.size(); ++i) {
    SemType pt = classes_->type_of(m.params[i].type);
    const Expr& arg = *args[i];
    if (!pt.is_primitive() && lvalue_shaped(arg)) {
      bound.push_back(eval::eval_lvalue(arg, caller));
      continue;
    }
    Value v = coerce(pt, eval::eval_expr(arg, caller));
    Location l = store_->fresh_location(pt);
    writes.push_back(StoreWrite{l, Value::null(), v});
    store_->write(l, std::move(v));
    bound.push_back(l);
  }

  Prefix here = prefix.extend(m.kind == MethodKind::Init ? std::string("init()") : call_label(m.name, args));
  Activation act{here, m.kind == MethodKind::Constructor, std::nullopt, nullptr};
  act.method = &m;
  if (pending_starts_) {
    act.starts = pending_starts_;
    pending_starts_ = nullptr;
  }

  store_->push_frame(target, true);
  ++depth_;
  for (std::size_t i = 0; i < bound.size(); ++i) store_->bind_alias(m.params[i].name, bound[i]);
  record(here, "method-invoke", std::move(writes));

  eval::EvalContext ctx = context(target, true);
  activations_.push_back(&act);
  try {
    exec_body(m.body, ctx, act);
  } catch (...) {
    activations_.pop_back();
    store_->pop_frame();
    --depth_;
    throw;
  }
  activations_.pop_back();
  store_->pop_frame();
  --depth_;
  record(here, "method-end", {});
  return act.returned.value_or(Value::null());
}

void Engine::exec_body(const std::vector<StmtPtr>& body, eval::EvalContext& ctx, Activation& act) {
  for (const auto& s : body) {
    exec_statement(*s, ctx, act);
    if (act.returned) break;
  }
}

void Engine::exec_statement(const Stmt& s, eval::EvalContext& ctx, Activation& act) {
  if (const auto* d = s.as<VarDecl>()) {
    declare_variable(*d, ctx, false, act.prefix);
    return;
  }
  if (const auto* a = s.as<Assign>()) {
    // Constructor wiring: `this.f = p` with p a by-name parameter shares p's location.
    if (act.constructor && act.method) {
      const auto* rhs = a->value->as<Name>();
      const Param* param = nullptr;
      if (rhs)
        for (const auto& p : act.method->params)
          if (p.name == rhs->id) param = &p;
      bool field_target = false;
      if (const auto* mem = a->target->as<Member>()) field_target = mem->object->is<This>();
      if (const auto* n = a->target->as<Name>()) field_target = !store_->lookup_local(n->id).has_value();
      if (param && field_target && !classes_->type_of(param->type).is_primitive()) {
        Location field = eval::eval_lvalue(*a->target, ctx);
        Location shared = *store_->lookup_local(param->name);
        std::vector<StoreWrite> writes;
        if (!store_->same_location(field, shared)) {
          Value before = store_->read(field);
          store_->merge(field, shared);
          writes.push_back(StoreWrite{store_->resolve(shared), before, store_->read(shared)});
        }
        record(act.prefix.extend(parse::print_expr(*a->target) + "=" + rhs->id), "alias-bind", std::move(writes));
        return;
      }
    }
    exec_single_assignment(*a->target, *a->value, ctx, act.prefix);
    return;
  }
  if (const auto* e = s.as<ExprStmt>()) {
    eval::eval_expr(*e->expr, ctx);
    return;
  }
  if (const auto* p = s.as<ParallelStmt>()) {
    SyncDecl sync;
    sync.span = s.span;
    for (const auto& b : p->branches) {
      if (const auto* mem = b->as<Member>()) {
        Value owner = eval::eval_expr(*mem->object, ctx);
        if (owner.is_ref() && !store_->field(owner.as_ref(), mem->member)) {
          sync.members.emplace_back(owner.as_ref(), mem->member);
          continue;
        }
      }
      eval::eval_expr(*b, ctx);  // component-level parallelism: nothing to execute
    }
    if (!sync.members.empty()) syncs_.push_back(std::move(sync));
    record(act.prefix.extend(parse::statement_label(s)), "parallel", {});
    return;
  }
  if (const auto* st = s.as<StartStmt>()) {
    if (!act.starts) throw SosError("start.outside-init", "start() is only allowed in Init", s.span);
    for (const auto& t : st->targets) {
      ObjectId component = ctx.self;
      if (const auto* mem = t->as<Member>()) {
        Value owner = eval::eval_expr(*mem->object, ctx);
        if (!owner.is_ref()) throw SosError("start.non-dynamic", "start() target has no owning component", t->span);
        component = owner.as_ref();
      }
      Value dyn = eval::eval_expr(*t, ctx);
      if (!dyn.is_ref() || classes_->interface_of(store_->object(dyn.as_ref()).class_name) != BuiltinInterface::Dynamic)
        throw SosError("start.non-dynamic", "start() applies only to Dynamic objects: " + parse::print_expr(*t), t->span);
      act.starts->push_back(StartRecord{component, dyn.as_ref(), parse::print_expr(*t), t->span});
      record(act.prefix.extend(parse::print_expr(*t) + ".start()"), "start", {});
    }
    return;
  }
  if (const auto* r = s.as<ReturnStmt>()) {
    act.returned = r->value ? eval::eval_expr(*r->value, ctx) : Value::null();
    return;
  }
  // Skip, blocks and composition entries have no discrete effect.
}

bool Engine::has_method(ObjectId target, const std::string& name) const {
  if (target.index >= store_->object_count()) return false;
  return classes_->method(store_->object(target).class_name, MethodKind::User, name) != nullptr;
}

Value Engine::call_method(eval::EvalContext& caller, ObjectId target, const std::string& name,
                          const std::vector<ExprPtr>& args, Span span) {
  const std::string& cls = store_->object(target).class_name;
  const Method* m = classes_->method(cls, MethodKind::User, name, args.size());
  if (!m) {
    if (classes_->method(cls, MethodKind::User, name))
      throw eval::EvalError(eval::ErrorKind::ArityMismatch, name + ": wrong number of arguments", span);
    throw eval::EvalError(eval::ErrorKind::UnknownFunction, "class '" + cls + "' has no method '" + name + "'", span);
  }
  Prefix base = activations_.empty() ? Prefix::root("system") : activations_.back()->prefix;
  return invoke_method(base, target, *m, args, caller, span);
}

Value Engine::create_object(eval::EvalContext& caller, const New& creation, Span span) {
  const ClassDecl* cls = creation.anonymous ? creation.anonymous.get() : classes_->find(creation.type_name);
  if (!cls) throw SosError("class.unknown", "cannot instantiate '" + creation.type_name + "'", span);
  if (creation.anonymous && !creation.args.empty())
    throw SosError("arity.mismatch", "anonymous classes take no constructor arguments", span);

  std::optional<ObjectId> outer;
  if (creation.anonymous) outer = caller.self;
  ObjectId obj = store_->new_object(cls->name, outer);
  Prefix base = activations_.empty() ? Prefix::root("system") : activations_.back()->prefix;
  Prefix here = base.extend("new " + call_label(creation.type_name, creation.args));

  // every instance variable starts as Null
  auto field_decls = classes_->fields(cls->name);
  for (const auto* f : field_decls)
    for (const auto& v : f->decl.vars) {
      SemType t = classes_->type_of(f->decl.type);
      if (v.array && !f->decl.type.array) t = SemType::array_of(t);
      store_->add_field(obj, v.name, store_->fresh_location(t));
    }
  eval::EvalContext ctx = context(obj, false);
  Activation init_act{here, false, std::nullopt, nullptr};
  activations_.push_back(&init_act);
  try {
    for (const auto* f : field_decls)
      if (std::any_of(f->decl.vars.begin(), f->decl.vars.end(), [](const VarDeclarator& v) { return v.init != nullptr; }) ||
          f->decl.constant)
        declare_variable(f->decl, ctx, true, here);
  } catch (...) {
    activations_.pop_back();
    throw;
  }
  activations_.pop_back();

  const Method* ctor = nullptr;
  auto ctors = classes_->constructors(cls->name);
  for (const auto* c : ctors)
    if (c->params.size() == creation.args.size()) ctor = c;
  if (!ctor) {
    if (!creation.args.empty() || !ctors.empty())
      throw SosError("arity.mismatch",
                     "no constructor of '" + cls->name + "' takes " + std::to_string(creation.args.size()) + " arguments",
                     span);
    record(here, "implicit-constructor", {});
    return Value::ref(obj);
  }
  invoke_method(base, obj, *ctor, creation.args, caller, span);
  return Value::ref(obj);
}

ObjectId Engine::instantiate(const std::string& class_name, const Prefix& prefix) {
  if (!classes_->find(class_name)) throw SosError("class.unknown", "unknown class '" + class_name + "'", {});
  New creation{class_name, {}, nullptr};
  Activation root{prefix, false, std::nullopt, nullptr};
  activations_.push_back(&root);
  eval::EvalContext ctx = context(ObjectId{static_cast<std::uint32_t>(store_->object_count())}, false);
  Value v;
  try {
    v = create_object(ctx, creation, {});
  } catch (...) {
    activations_.pop_back();
    throw;
  }
  activations_.pop_back();
  return v.as_ref();
}

InitResult Engine::run_init(ObjectId system, const Prefix& prefix) {
  const std::string& cls = store_->object(system).class_name;
  const Method* init = classes_->method(cls, MethodKind::Init);
  if (!init) throw SosError("init.missing", "system '" + cls + "' has no Init()", {});
  InitResult out;
  eval::EvalContext caller = context(system, false);
  pending_starts_ = &out.starts;
  invoke_method(prefix, system, *init, {}, caller, init->span);
  pending_starts_ = nullptr;

  std::set<std::uint32_t> seen;
  for (const auto& s : out.starts)
    if (!seen.insert(s.component.index).second)
      throw SosError("init.multiple-starts", "component started twice: " + s.label, s.span);
  for (const auto& s : out.starts) out.config.statements.push_back(prefix.extend(s.label));
  out.config.store = *store_;
  return out;
}

}  // namespace apricot::sos

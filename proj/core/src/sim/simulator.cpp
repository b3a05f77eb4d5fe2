#include "apricot/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "apricot/eval/eval.hpp"
#include "apricot/sos/engine.hpp"

namespace apricot::sim {

using analysis::Endpoint;
using namespace apricot::ast;

std::optional<Policy> policy_from(std::string_view name) {
  if (name == "eager") return Policy::Eager;
  if (name == "lazy") return Policy::Lazy;
  if (name == "random") return Policy::Random;
  if (name == "explore") return Policy::Explore;
  return std::nullopt;
}

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Eager: return "eager";
    case Policy::Lazy: return "lazy";
    case Policy::Random: return "random";
    case Policy::Explore: return "explore";
  }
  return "eager";
}

std::optional<std::string> SimConfig::validate() const {
  if (!std::isfinite(t_end) || t_end < 0) return "t_end must be a finite non-negative number";
  if (!std::isfinite(dt) || dt <= 0) return "dt must be positive";
  if (!std::isfinite(event_tol) || event_tol <= 0) return "event_tol must be positive";
  if (!std::isfinite(value_tol) || value_tol < 0) return "value_tol must be non-negative";
  if (max_jumps_per_instant < 1) return "max_jumps_per_instant must be at least 1";
  if (max_jumps < 0) return "max_jumps must be non-negative";
  if (max_branches < 1) return "max_branches must be at least 1";
  return std::nullopt;
}

namespace {

bool truth(const Value& v, Span span) {
  if (!v.is_boolean()) throw eval::EvalError(eval::ErrorKind::TypeMismatch, "condition is not Boolean", span);
  return v.as_boolean();
}

/// Boolean value of `e` where numeric `==` holds within `tol`; with `relax_order`
/// the orderings are widened by `tol` as well.
bool holds(const Expr& e, eval::EvalContext& ctx, double tol, bool relax_order) {
  if (const auto* b = e.as<Binary>()) {
    switch (b->op) {
      case BinaryOp::And: return holds(*b->lhs, ctx, tol, relax_order) && holds(*b->rhs, ctx, tol, relax_order);
      case BinaryOp::Or: return holds(*b->lhs, ctx, tol, relax_order) || holds(*b->rhs, ctx, tol, relax_order);
      case BinaryOp::Xor: return holds(*b->lhs, ctx, tol, relax_order) != holds(*b->rhs, ctx, tol, relax_order);
      case BinaryOp::Eq:
      case BinaryOp::Ne:
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge: {
        const bool order = b->op != BinaryOp::Eq && b->op != BinaryOp::Ne;
        if (order && !relax_order) break;
        const Value l = eval::eval_expr(*b->lhs, ctx);
        const Value r = eval::eval_expr(*b->rhs, ctx);
        if (!l.is_finite_number() || !r.is_finite_number()) break;
        const double x = l.as_real();
        const double y = r.as_real();
        switch (b->op) {
          case BinaryOp::Eq: return std::fabs(x - y) <= tol;
          case BinaryOp::Ne: return std::fabs(x - y) > tol;
          case BinaryOp::Lt: return x < y + tol;
          case BinaryOp::Le: return x <= y + tol;
          case BinaryOp::Gt: return x > y - tol;
          default: return x >= y - tol;
        }
      }
      default: break;
    }
  }
  if (const auto* u = e.as<Unary>(); u && u->op == UnaryOp::Not) return !holds(*u->operand, ctx, tol, relax_order);
  if (const auto* in = e.as<In>(); in && relax_order && tol > 0) {
    const Value v = eval::eval_expr(*in->value, ctx);
    const Interval iv = eval::eval_interval(in->interval, ctx);
    if (v.is_finite_number()) {
      const double x = v.as_real();
      if (iv.lo.is_finite_number() && x < iv.lo.as_real() - tol) return false;
      if (iv.hi.is_finite_number() && x > iv.hi.as_real() + tol) return false;
      if (iv.lo.is_inf() || iv.hi.is_neg_inf()) return false;
      return true;
    }
    return eval::eval_interval_membership(v, iv, e.span);
  }
  return truth(eval::eval_expr(e, ctx), e.span);
}

bool all_hold(const std::vector<ExprPtr>& items, eval::EvalContext& ctx, double tol, bool relax_order) {
  for (const auto& i : items)
    if (!holds(*i, ctx, tol, relax_order)) return false;
  return true;
}

void eq_atoms(const Expr& e, std::vector<const Binary*>& out) {
  if (const auto* b = e.as<Binary>()) {
    if (b->op == BinaryOp::Eq) out.push_back(b);
    if (b->op == BinaryOp::And || b->op == BinaryOp::Or || b->op == BinaryOp::Xor) {
      eq_atoms(*b->lhs, out);
      eq_atoms(*b->rhs, out);
    }
  } else if (const auto* u = e.as<Unary>(); u && u->op == UnaryOp::Not) {
    eq_atoms(*u->operand, out);
  }
}

bool mentions_tw(const Expr& e) {
  if (const auto* n = e.as<Name>()) return n->id == "tw";
  if (const auto* m = e.as<Member>()) return m->member == "tw" || mentions_tw(*m->object);
  if (const auto* b = e.as<Binary>()) return mentions_tw(*b->lhs) || mentions_tw(*b->rhs);
  if (const auto* u = e.as<Unary>()) return mentions_tw(*u->operand);
  if (const auto* c = e.as<Call>()) {
    for (const auto& a : c->args)
      if (mentions_tw(*a)) return true;
  }
  if (const auto* in = e.as<In>()) return mentions_tw(*in->value);
  return false;
}

double to_double(const Value& v) {
  if (v.is_finite_number()) return v.as_real();
  if (v.is_inf()) return std::numeric_limits<double>::infinity();
  if (v.is_neg_inf()) return -std::numeric_limits<double>::infinity();
  if (v.is_boolean()) return v.as_boolean() ? 1.0 : 0.0;
  return std::numeric_limits<double>::quiet_NaN();
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const eval::EvalError& e) {
    throw SimError(std::string(eval::rule_id(e.kind())), e.what(), e.span());
  } catch (const sos::SosError& e) {
    throw SimError(e.rule_id(), e.what(), e.span());
  }
}

}  // namespace

struct Simulator::Flow {
  Location var;
  const Expr* rhs = nullptr;
  std::optional<Location> slot;
  ObjectId self;
};

namespace {

/// Every relationship in firing order: sync pairs, then solo transitions by component and declaration.
std::vector<Item> all_items(const analysis::HybridModel& m) {
  std::vector<Item> out;
  std::set<std::pair<int, int>> in_sync;
  for (std::size_t i = 0; i < m.syncs.size(); ++i) {
    Item it;
    it.sync = static_cast<int>(i);
    it.members = m.syncs[i].members;
    for (const auto& [c, t] : it.members) {
      if (!it.name.empty()) it.name += "||";
      it.name += m.components[c].name + "." + m.components[c].transitions[t].name;
      in_sync.insert({c, t});
    }
    out.push_back(std::move(it));
  }
  for (std::size_t c = 0; c < m.components.size(); ++c)
    for (std::size_t t = 0; t < m.components[c].transitions.size(); ++t) {
      const std::pair<int, int> key{static_cast<int>(c), static_cast<int>(t)};
      if (in_sync.count(key)) continue;
      out.push_back(Item{-1, {key}, m.components[c].name + "." + m.components[c].transitions[t].name});
    }
  return out;
}

sos::Engine engine_for(const analysis::HybridModel& m, Store& st) { return sos::Engine(*m.classes, st, m.externals); }

}  // namespace

Simulator::Simulator(const analysis::HybridModel& model, SimConfig cfg) : model_(&model), cfg_(cfg) {
  if (auto err = cfg_.validate()) throw SimError("config.invalid", *err);
  for (const auto& c : model.components)
    for (const auto& t : c.transitions)
      for (const auto& e : t.condition) tw_in_guards_ = tw_in_guards_ || mentions_tw(*e);
}

SimState Simulator::initial_state() const {
  SimState s;
  s.store = model_->store;
  s.rng.seed(cfg_.seed);
  for (const auto& c : model_->components) {
    ComponentState cs;
    if (!c.parent) cs.active = c.initial;
    s.comps.push_back(cs);
  }
  return s;
}

bool Simulator::flowing(const SimState& s, int comp) const {
  const auto& cs = s.comps[comp];
  return cs.active && cs.active->kind == Endpoint::Kind::Dynamic && !cs.waiting;
}

std::vector<Simulator::Flow> Simulator::flows(const SimState& s) const {
  std::vector<Flow> out;
  std::set<std::uint32_t> seen;
  for (std::size_t c = 0; c < model_->components.size(); ++c) {
    if (!flowing(s, static_cast<int>(c))) continue;
    const auto& d = model_->components[c].dynamics[s.comps[c].active->index];
    for (const auto& ode : d.odes) {
      if (!seen.insert(s.store.resolve(ode.var).index).second)
        throw SimError("flow.conflict", "variable '" + ode.name + "' has two active flows");
      out.push_back(Flow{ode.var, ode.rhs.get(), ode.rhs_slot, ode.self});
    }
  }
  return out;
}

void Simulator::rk4(Store& store, const std::vector<Flow>& f, double h) const {
  const std::size_t n = f.size();
  if (n == 0 || h == 0) return;
  auto eng = engine_for(*model_, store);
  std::vector<double> y0(n);
  for (std::size_t i = 0; i < n; ++i) y0[i] = eval::numeric(store.read(f[i].var), {});
  auto deriv = [&](const std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) store.write(f[i].var, Value::real(y[i]));
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i].slot) {
        d[i] = eval::numeric(store.read(*f[i].slot), {});
      } else {
        auto ctx = eng.context(f[i].self, false);
        d[i] = eval::numeric(eval::eval_expr(*f[i].rhs, ctx), f[i].rhs->span);
      }
    }
    return d;
  };
  auto shifted = [&](const std::vector<double>& k, double w) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = y0[i] + w * k[i];
    return y;
  };
  const auto k1 = deriv(y0);
  const auto k2 = deriv(shifted(k1, h / 2));
  const auto k3 = deriv(shifted(k2, h / 2));
  const auto k4 = deriv(shifted(k3, h));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = y0[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    if (!std::isfinite(y)) throw SimError("eval.numeric-overflow", "flow produced a non-finite value");
    store.write(f[i].var, Value::real(y));
  }
}

void Simulator::integrate_step(SimState& s, double h) const {
  guarded([&] {
    rk4(s.store, flows(s), h);
    for (std::size_t c = 0; c < s.comps.size(); ++c)
      if (s.comps[c].waiting) {
        const Location tw = model_->components[c].tw;
        s.store.write(tw, Value::real(to_double(s.store.read(tw)) + h));
      }
    s.time += h;
  });
}

bool Simulator::invariant_holds(const SimState& s, int comp, bool tolerant) const {
  const auto& cs = s.comps[comp];
  if (!cs.active || cs.active->kind != Endpoint::Kind::Dynamic) return true;
  const auto& d = model_->components[comp].dynamics[cs.active->index];
  Store st = s.store;
  auto eng = engine_for(*model_, st);
  auto ctx = eng.context(d.object, false);
  return guarded([&] { return all_hold(d.invariant, ctx, tolerant ? cfg_.value_tol : 0.0, true); });
}

bool Simulator::guard_holds(const SimState& s, int comp, int transition) const {
  Store st = s.store;
  auto eng = engine_for(*model_, st);
  auto ctx = eng.context(model_->components[comp].object, false);
  return guarded(
      [&] { return all_hold(model_->components[comp].transitions[transition].condition, ctx, cfg_.value_tol, false); });
}

namespace {

bool item_source_active(const analysis::HybridModel& m, const SimState& s, const Item& it) {
  for (const auto& [c, t] : it.members) {
    const auto& a = s.comps[c].active;
    if (!a || !(*a == m.components[c].transitions[t].source)) return false;
  }
  return true;
}

bool item_guards(const analysis::HybridModel& m, Store& st, const Item& it, double tol) {
  auto eng = engine_for(m, st);
  for (const auto& [c, t] : it.members) {
    auto ctx = eng.context(m.components[c].object, false);
    if (!all_hold(m.components[c].transitions[t].condition, ctx, tol, false)) return false;
  }
  return true;
}

}  // namespace

std::optional<double> Simulator::check_invariant_horizon(const SimState& s, int comp, double dt) const {
  return guarded([&]() -> std::optional<double> {
    if (!flowing(s, comp)) return std::nullopt;
    const auto fl = flows(s);
    auto fails = [&](double h) {
      SimState probe = s;
      rk4(probe.store, fl, h);
      return !invariant_holds(probe, comp, false);
    };
    if (!fails(dt)) return std::nullopt;
    double lo = 0.0;
    double hi = dt;
    for (int i = 0; i < 200; ++i) {
      const double mid = lo + (hi - lo) / 2;
      if (mid <= lo || mid >= hi) break;
      (fails(mid) ? hi : lo) = mid;
    }
    return s.time + lo;
  });
}

bool Simulator::at_border(const SimState& s, int comp) const {
  if (!flowing(s, comp)) return false;
  if (!invariant_holds(s, comp, false)) return true;
  SimState probe = s;
  rk4(probe.store, flows(probe), std::min(cfg_.dt, 1e-6));
  return !invariant_holds(probe, comp, false);
}

namespace {

/// Runs the actions of `it` on `st`; sync members each run on the pre-state and their writes are merged.
void run_actions(const analysis::HybridModel& m, Store& st, const Item& it, double time, std::vector<StepRecord>* log) {
  struct Run {
    const analysis::Action* action;
    Prefix prefix;
  };
  std::vector<Run> runs;
  for (const auto& [c, t] : it.members) {
    const auto& comp = m.components[c];
    const auto& tr = comp.transitions[t];
    if (tr.action < 0) continue;
    const auto& a = comp.actions[tr.action];
    if (!a.object || !a.discrete) continue;
    runs.push_back(Run{&a, Prefix::root("system").extend(comp.name).extend(tr.name)});
  }
  auto exec = [&](Store& target, const Run& r, std::vector<StepRecord>* records) {
    auto eng = engine_for(m, target);
    eng.set_time(time);
    eng.set_log(records);
    auto ctx = eng.context(*r.action->object, false);
    eng.exec_discrete(r.action->discrete->body, r.action->mode, ctx, r.prefix);
  };
  if (runs.size() == 1) {
    exec(st, runs.front(), log);
    return;
  }
  std::map<std::uint32_t, std::pair<Location, Value>> merged;
  std::map<std::uint32_t, std::size_t> owner;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Store branch = st;
    std::vector<StepRecord> records;
    exec(branch, runs[i], &records);
    for (const auto& rec : records)
      for (const auto& w : rec.writes) {
        const auto key = branch.resolve(w.location).index;
        if (auto o = owner.find(key); o != owner.end() && o->second != i)
          throw SimError("write-conflict", "synchronised actions both write @" + std::to_string(key));
        owner[key] = i;
        merged[key] = {w.location, w.after};
      }
    if (log)
      for (auto& rec : records) log->push_back(std::move(rec));
  }
  for (const auto& [key, lv] : merged) st.write(lv.first, lv.second);
}

}  // namespace

std::vector<Item> Simulator::valid_compositions(const SimState& s) const {
  return guarded([&] {
    std::vector<Item> out;
    Store st = s.store;
    for (const auto& it : all_items(*model_)) {
      if (!item_source_active(*model_, s, it)) continue;
      if (!item_guards(*model_, st, it, cfg_.value_tol)) continue;
      SimState after = s;
      run_actions(*model_, after.store, it, s.time, nullptr);
      bool ok = true;
      for (const auto& [c, t] : it.members) {
        after.comps[c].active = model_->components[c].transitions[t].target;
        after.comps[c].waiting = false;
        ok = ok && invariant_holds(after, c, true);
      }
      if (ok) out.push_back(it);
    }
    return out;
  });
}

std::vector<double> Simulator::snapshot(const SimState& s) const {
  std::vector<double> out;
  for (const auto& c : model_->components) {
    for (const auto& v : c.variables) out.push_back(to_double(s.store.read(v.loc)));
    out.push_back(to_double(s.store.read(c.tw)));
  }
  return out;
}

Trace Simulator::empty_trace() const {
  Trace t;
  for (const auto& c : model_->components) {
    for (const auto& v : c.variables) t.columns.push_back(v.name);
    t.columns.push_back(c.name + ".tw");
    t.components.push_back(c.name);
  }
  return t;
}

void Simulator::record_sample(const SimState& s, Trace& t) const {
  Sample smp;
  smp.time = s.time;
  smp.values = snapshot(s);
  for (std::size_t c = 0; c < s.comps.size(); ++c) {
    const auto& a = s.comps[c].active;
    const auto& comp = model_->components[c];
    if (!a)
      smp.active.emplace_back();
    else if (a->kind == Endpoint::Kind::Dynamic)
      smp.active.push_back(comp.dynamics[a->index].name);
    else
      smp.active.push_back(model_->subsystems[a->index].name);
  }
  if (!t.samples.empty() && t.samples.back().time == s.time)
    t.samples.back() = std::move(smp);
  else
    t.samples.push_back(std::move(smp));
}

void Simulator::apply_jump(SimState& s, const Item& item, Trace* trace) const {
  guarded([&] {
    if (++s.jumps_at_instant > cfg_.max_jumps_per_instant)
      throw SimError("sim.zeno", "more than " + std::to_string(cfg_.max_jumps_per_instant) + " jumps at t=" +
                                     format_real(s.time));
    Event ev;
    ev.time = s.time;
    ev.kind = item.sync >= 0 ? "sync-jump" : "jump";
    ev.name = item.name;
    ev.prefix = "system." + item.name;
    ev.pre = snapshot(s);
    run_actions(*model_, s.store, item, s.time, trace && cfg_.step_log ? &trace->steps : nullptr);
    for (const auto& [c, t] : item.members) {
      const auto& tr = model_->components[c].transitions[t];
      if (tr.source.kind == Endpoint::Kind::Subsystem)
        for (int sc : model_->subsystems[tr.source.index].components) s.comps[sc] = ComponentState{};
      s.comps[c].active = tr.target;
      s.comps[c].waiting = false;
      s.store.write(model_->components[c].tw, Value::real(0.0));
      if (tr.target.kind == Endpoint::Kind::Subsystem) {
        const auto& sub = model_->subsystems[tr.target.index];
        auto eng = engine_for(*model_, s.store);
        eng.set_time(s.time);
        eng.set_log(trace && cfg_.step_log ? &trace->steps : nullptr);
        auto init = eng.run_init(sub.object, Prefix::root("system").extend(model_->components[c].name).extend(sub.name));
        for (int sc : sub.components) s.comps[sc] = ComponentState{};
        for (const auto& st : init.starts) {
          const int sc = model_->component_index(st.component);
          if (sc < 0) continue;
          const auto& dyn = model_->components[sc].dynamics;
          for (std::size_t i = 0; i < dyn.size(); ++i)
            if (dyn[i].object == st.dynamic) s.comps[sc].active = Endpoint{Endpoint::Kind::Dynamic, static_cast<int>(i)};
          s.store.write(model_->components[sc].tw, Value::real(0.0));
        }
      }
    }
    s.latched.insert(item.key());
    ++s.total_jumps;
    s.check_border = true;
    ev.post = snapshot(s);
    if (trace) trace->events.push_back(std::move(ev));
  });
}

std::vector<Option> Simulator::options(SimState& s, Trace& trace) const {
  return guarded([&] {
    const auto items = all_items(*model_);
    Store& st = s.store;
    // Release latches whose guard has become false or whose source is gone.
    for (auto* set : {&s.latched, &s.declined})
      for (auto it = set->begin(); it != set->end();) {
        bool keep = false;
        for (const auto& item : items)
          if (item.key() == *it) keep = item_source_active(*model_, s, item) && item_guards(*model_, st, item, cfg_.value_tol);
        it = keep ? std::next(it) : set->erase(it);
      }
    const auto valid = valid_compositions(s);
    std::vector<bool> border(s.comps.size(), false);
    if (s.check_border)
      for (std::size_t c = 0; c < s.comps.size(); ++c) border[c] = at_border(s, static_cast<int>(c));
    auto urgent = [&](const Item& it) {
      for (const auto& [c, t] : it.members)
        if (border[c] || s.comps[c].waiting) return true;
      return false;
    };
    std::vector<Item> enabled;
    for (const auto& it : valid)
      if (!s.latched.count(it.key()) && (!s.declined.count(it.key()) || urgent(it))) enabled.push_back(it);

    // A component at its border with nothing to take stops flowing.
    for (std::size_t c = 0; c < s.comps.size(); ++c) {
      if (!border[c]) continue;
      bool served = false;
      for (const auto& it : enabled)
        for (const auto& m : it.members) served = served || m.first == static_cast<int>(c);
      if (served) continue;
      s.comps[c].waiting = true;
      s.store.write(model_->components[c].tw, Value::real(0.0));
      border[c] = false;
      const auto& comp = model_->components[c];
      const std::string name = comp.name + "." + comp.dynamics[s.comps[c].active->index].name;
      trace.events.push_back(Event{s.time, "flow-stop", name, "system." + name, snapshot(s), {}});
    }

    std::vector<Option> out;
    switch (cfg_.policy) {
      case Policy::Eager:
        if (!enabled.empty()) out.push_back(Option{enabled.front()});
        break;
      case Policy::Lazy:
        for (const auto& it : enabled)
          if (urgent(it)) {
            out.push_back(Option{it});
            break;
          }
        break;
      case Policy::Random:
      case Policy::Explore: {
        for (const auto& it : enabled) out.push_back(Option{it});
        const bool pressed = std::find(border.begin(), border.end(), true) != border.end();
        if (!out.empty() && !pressed) out.push_back(Option{});
        break;
      }
    }
    return out;
  });
}

void Simulator::take(SimState& s, const Option& o, const std::vector<Option>& all, Trace& trace) const {
  if (o.item) {
    apply_jump(s, *o.item, &trace);
    return;
  }
  for (const auto& other : all)
    if (other.item) s.declined.insert(other.item->key());
}

Simulator::Stop Simulator::advance(SimState& s, Trace& trace, bool stop_on_choice, std::vector<Option>* choice) const {
  return guarded([&]() -> Stop {
    const auto items = all_items(*model_);
    const double eps = 1e-12 * cfg_.dt;
    for (;;) {
      // Resolve the current instant.
      for (;;) {
        auto opts = options(s, trace);
        if (opts.empty() || (opts.size() == 1 && !opts.front().item)) break;
        if (cfg_.policy == Policy::Explore && s.total_jumps >= cfg_.max_jumps) {
          record_sample(s, trace);
          trace.termination = "budget";
          return Stop::Budget;
        }
        if (opts.size() >= 2 && stop_on_choice) {
          if (choice) *choice = std::move(opts);
          return Stop::Choice;
        }
        std::size_t pick = 0;
        if (cfg_.policy == Policy::Random && opts.size() > 1) pick = static_cast<std::size_t>(s.rng() % opts.size());
        take(s, opts[pick], opts, trace);
      }
      record_sample(s, trace);

      bool live = false;
      for (const auto& c : s.comps) live = live || (c.active && !c.waiting);
      if (!live && !tw_in_guards_) {
        trace.termination = "quiescent";
        return Stop::Finished;
      }
      if (s.time >= cfg_.t_end - eps) {
        trace.termination = "t_end";
        return Stop::Finished;
      }

      // Step to the next grid point or t_end.
      double next = static_cast<double>(s.grid + 1) * cfg_.dt;
      const bool final = next >= cfg_.t_end - eps;
      if (final) next = cfg_.t_end;
      const double h = next - s.time;
      const double before = s.time;
      const auto fl = flows(s);

      auto at = [&](double dt) {
        SimState probe = s;
        rk4(probe.store, fl, dt);
        return probe.store;
      };
      auto inv_fail = [&](Store& st, std::vector<int>* which) {
        bool any = false;
        auto eng = engine_for(*model_, st);
        for (std::size_t c = 0; c < s.comps.size(); ++c) {
          if (!flowing(s, static_cast<int>(c))) continue;
          const auto& d = model_->components[c].dynamics[s.comps[c].active->index];
          auto ctx = eng.context(d.object, false);
          if (!all_hold(d.invariant, ctx, 0.0, true)) {
            any = true;
            if (which) which->push_back(static_cast<int>(c));
          }
        }
        return any;
      };

      // Guards that may turn true during the step, with their `==` atoms and signs at the start.
      struct Watch {
        const Item* item;
        std::vector<std::pair<const Binary*, std::pair<ObjectId, double>>> atoms;
      };
      std::vector<Watch> watches;
      if (cfg_.policy != Policy::Lazy && !fl.empty()) {
        auto eng = engine_for(*model_, s.store);
        for (const auto& it : items) {
          if (s.latched.count(it.key()) || s.declined.count(it.key()) || !item_source_active(*model_, s, it)) continue;
          if (item_guards(*model_, s.store, it, cfg_.value_tol)) continue;
          Watch w{&it, {}};
          for (const auto& [c, t] : it.members) {
            auto ctx = eng.context(model_->components[c].object, false);
            std::vector<const Binary*> eqs;
            for (const auto& e : model_->components[c].transitions[t].condition) eq_atoms(*e, eqs);
            for (const auto* b : eqs) {
              const Value l = eval::eval_expr(*b->lhs, ctx);
              const Value r = eval::eval_expr(*b->rhs, ctx);
              if (l.is_finite_number() && r.is_finite_number() && l.as_real() != r.as_real())
                w.atoms.push_back({b, {model_->components[c].object, l.as_real() - r.as_real()}});
            }
          }
          watches.push_back(std::move(w));
        }
      }
      auto guard_event = [&](Store& st) {
        auto eng = engine_for(*model_, st);
        for (const auto& w : watches) {
          if (item_guards(*model_, st, *w.item, cfg_.value_tol)) return true;
          for (const auto& [b, origin] : w.atoms) {
            auto ctx = eng.context(origin.first, false);
            const Value l = eval::eval_expr(*b->lhs, ctx);
            const Value r = eval::eval_expr(*b->rhs, ctx);
            if (!l.is_finite_number() || !r.is_finite_number()) continue;
            const double d = l.as_real() - r.as_real();
            if ((d > 0) != (origin.second > 0) || d == 0) return true;
          }
        }
        return false;
      };

      Store end = at(h);
      bool event = inv_fail(end, nullptr) || guard_event(end);
      if (!event) {
        s.store = std::move(end);
        for (std::size_t c = 0; c < s.comps.size(); ++c)
          if (s.comps[c].waiting) {
            const Location tw = model_->components[c].tw;
            s.store.write(tw, Value::real(to_double(s.store.read(tw)) + h));
          }
        s.time = next;
        ++s.grid;
        s.check_border = false;
      } else {
        // Earliest offset at which an invariant fails or a watched guard turns true.
        double lo = 0.0;
        double hi = h;
        Store hi_store = std::move(end);
        for (int i = 0; i < 200; ++i) {
          const double mid = lo + (hi - lo) / 2;
          if (mid <= lo || mid >= hi) break;
          Store m = at(mid);
          if (inv_fail(m, nullptr) || guard_event(m)) {
            hi = mid;
            hi_store = std::move(m);
          } else {
            lo = mid;
          }
        }
        std::vector<int> failing;
        const bool border = inv_fail(hi_store, &failing);
        const double taken = border ? lo : hi;
        s.store = border ? at(lo) : std::move(hi_store);
        for (std::size_t c = 0; c < s.comps.size(); ++c)
          if (s.comps[c].waiting) {
            const Location tw = model_->components[c].tw;
            s.store.write(tw, Value::real(to_double(s.store.read(tw)) + taken));
          }
        if (taken == h) {
          s.time = next;
          ++s.grid;
        } else {
          s.time += taken;
        }
        s.check_border = true;
        if (border)
          for (int c : failing) {
            const auto& comp = model_->components[c];
            const std::string name = comp.name + "." + comp.dynamics[s.comps[c].active->index].name;
            trace.events.push_back(Event{s.time, "invariant-hit", name, "system." + name, snapshot(s), {}});
          }
      }
      if (s.time > before) s.jumps_at_instant = 0;
    }
  });
}

Trace Simulator::simulate() const {
  SimState s = initial_state();
  Trace t = empty_trace();
  if (cfg_.policy == Policy::Explore) {
    // First depth-first path: the first option is taken at every choice.
    std::vector<Option> opts;
    while (advance(s, t, true, &opts) == Stop::Choice) take(s, opts.front(), opts, t);
    return t;
  }
  advance(s, t, false);
  return t;
}

Simulator::ExploreResult Simulator::explore() const {
  ExploreResult r;
  r.nodes.push_back(ExploreNode{0, -1, "init", 0.0});
  struct Branch {
    SimState state;
    Trace trace;
    int node;
  };
  std::vector<Branch> stack;
  stack.push_back(Branch{initial_state(), empty_trace(), 0});
  while (!stack.empty()) {
    Branch b = std::move(stack.back());
    stack.pop_back();
    std::vector<Option> opts;
    const Stop stop = advance(b.state, b.trace, true, &opts);
    if (stop != Stop::Choice) {
      if (stop == Stop::Budget) r.truncated = true;
      if (static_cast<int>(r.leaves.size()) >= cfg_.max_branches) {
        r.truncated = true;
        break;
      }
      r.leaves.emplace_back(b.node, std::move(b.trace));
      continue;
    }
    const int first = static_cast<int>(r.nodes.size());
    for (std::size_t i = 0; i < opts.size(); ++i)
      r.nodes.push_back(ExploreNode{first + static_cast<int>(i), b.node, opts[i].label(), b.state.time});
    // Pushed in reverse so the first option is explored first.
    for (std::size_t i = opts.size(); i-- > 0;) {
      Branch child{b.state, b.trace, first + static_cast<int>(i)};
      take(child.state, opts[i], opts, child.trace);
      stack.push_back(std::move(child));
    }
  }
  return r;
}

}  // namespace apricot::sim

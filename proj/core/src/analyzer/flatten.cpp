#include <set>

#include "apricot/analyzer/analyzer.hpp"
#include "apricot/parser/printer.hpp"

namespace apricot::analysis {

using namespace apricot::ast;

int HybridModel::component_index(ObjectId obj) const {
  for (std::size_t i = 0; i < components.size(); ++i)
    if (components[i].object == obj) return static_cast<int>(i);
  return -1;
}

namespace {

bool assignment_like(std::optional<BuiltinInterface> i) {
  return i == BuiltinInterface::Assignment || i == BuiltinInterface::ParallelAssignment ||
         i == BuiltinInterface::SequentialAssignment;
}

class Flattener {
 public:
  Flattener(HybridModel& m, sos::Engine& eng, Report& diags) : m_(m), eng_(eng), ct_(*m.classes), diags_(diags) {}

  void components_of(ObjectId system, std::optional<int> parent, const std::string& prefix) {
    const Object sys = m_.store.object(system);
    for (const auto& [fname, floc] : sys.fields) {
      const Value v = m_.store.read(floc);
      if (!v.is_ref()) continue;
      const auto iface = ct_.interface_of(m_.store.object(v.as_ref()).class_name);
      if (iface != BuiltinInterface::Plant && iface != BuiltinInterface::Controller) continue;
      component(prefix + fname, v.as_ref(), *iface, parent);
    }
  }

 private:
  void report(std::string rule, std::string message, Span span = {}) {
    diags_.push_back(Diagnostic{Severity::Error, std::move(rule), std::move(message), span, {}});
  }

  void component(const std::string& name, ObjectId obj, BuiltinInterface iface, std::optional<int> parent) {
    Component c;
    c.name = name;
    c.object = obj;
    c.kind = iface;
    c.parent = parent;
    const Object o = m_.store.object(obj);
    std::vector<std::pair<std::string, ObjectId>> subsystems;
    for (const auto& [fname, floc] : o.fields) {
      const Value v = m_.store.read(floc);
      if (v.is_null()) {
        if (assignment_like(m_.store.cell(floc).type.builtin())) c.actions.push_back(Action{fname, std::nullopt, nullptr});
        continue;
      }
      if (!v.is_ref()) continue;
      const std::string& cls = m_.store.object(v.as_ref()).class_name;
      const auto fi = ct_.interface_of(cls);
      if (fi == BuiltinInterface::Dynamic) {
        c.dynamics.push_back(dynamic(fname, v.as_ref()));
      } else if (assignment_like(fi)) {
        Action a{fname, v.as_ref(), ct_.method(cls, MethodKind::Discrete)};
        a.mode = a.discrete && a.discrete->mode == AssignMode::Sequential ? sos::DiscreteMode::Sequential
                                                                        : sos::DiscreteMode::Parallel;
        c.actions.push_back(a);
      } else if (fi == BuiltinInterface::System) {
        subsystems.emplace_back(fname, v.as_ref());
      }
    }

    if (auto existing = m_.store.own_field(obj, "tw")) {
      c.tw = *existing;
    } else {
      c.tw = m_.store.fresh_location(SemType::mathematic(Scalar::Real));
      m_.store.add_field(obj, "tw", c.tw);
    }
    m_.store.write(c.tw, Value::real(0.0));

    std::set<std::uint32_t> seen;
    std::vector<Variable> chain;
    for (const auto& d : c.dynamics)
      for (const auto& ode : d.odes) {
        if (!seen.insert(m_.store.resolve(ode.var).index).second) continue;
        Variable var{name + "." + ode.name, ode.var};
        (ode.name.find('_') == std::string::npos ? c.variables : chain).push_back(var);
      }
    c.variables.insert(c.variables.end(), chain.begin(), chain.end());

    const int index = static_cast<int>(m_.components.size());
    m_.components.push_back(std::move(c));

    if (!subsystems.empty()) {
      if (parent) {
        report("subsystem.depth", "component '" + name + "': subsystem depth>1 unsupported");
      } else {
        Subsystem s{subsystems.front().first, subsystems.front().second, index, {}};
        const std::size_t first = m_.components.size();
        components_of(s.object, index, name + "." + s.name + ".");
        for (std::size_t i = first; i < m_.components.size(); ++i) s.components.push_back(static_cast<int>(i));
        m_.components[index].subsystem = static_cast<int>(m_.subsystems.size());
        m_.subsystems.push_back(std::move(s));
      }
    }
    transitions(index);
  }

  DynamicMode dynamic(const std::string& name, ObjectId obj) {
    DynamicMode d;
    d.name = name;
    d.object = obj;
    const std::string& cls = m_.store.object(obj).class_name;
    auto ctx = eng_.context(obj, false);
    if (const Method* cont = ct_.method(cls, MethodKind::Continuous))
      for (const auto& s : cont->body) {
        const auto* es = s->as<ExprStmt>();
        const auto* b = es ? es->expr->as<Binary>() : nullptr;
        const auto* dot = b && b->op == BinaryOp::Eq ? b->lhs->as<Dot>() : nullptr;
        if (!dot) {
          report("continuous.equation", "Continuous() holds equations of the form dot(v,n) == e", s->span);
          continue;
        }
        if (dot->wrt) {
          report("dot.unsupported", "dot(v,u,n) cannot be simulated", s->span);
          continue;
        }
        const Location base = eval::eval_lvalue(*dot->var, ctx);
        const std::string base_name = parse::print_expr(*dot->var);
        std::vector<Location> chain{base};
        for (int k = 1; k < dot->order; ++k) chain.push_back(m_.store.ensure_derivative_slot(base, k));
        for (int k = 0; k < dot->order; ++k) {
          Ode ode;
          ode.var = chain[k];
          ode.self = obj;
          ode.name = k == 0 ? base_name : base_name + "_" + std::to_string(k);
          if (k + 1 < dot->order)
            ode.rhs_slot = chain[k + 1];
          else
            ode.rhs = b->rhs;
          d.odes.push_back(std::move(ode));
        }
      }
    for (const auto* blk : ct_.invariants(cls))
      for (const auto& item : blk->items) d.invariant.push_back(item);
    return d;
  }

  void transitions(int index) {
    Component& c = m_.components[index];
    const std::string& cls = m_.store.object(c.object).class_name;
    auto endpoint = [&](const ExprPtr& slot, const std::string& entry) -> std::optional<Endpoint> {
      const auto* n = slot ? slot->as<Name>() : nullptr;
      if (n) {
        for (std::size_t i = 0; i < c.dynamics.size(); ++i)
          if (c.dynamics[i].name == n->id) return Endpoint{Endpoint::Kind::Dynamic, static_cast<int>(i)};
        if (c.subsystem && m_.subsystems[*c.subsystem].name == n->id) return Endpoint{Endpoint::Kind::Subsystem, *c.subsystem};
      }
      report("composition.endpoint", c.name + "." + entry + ": endpoint is not a Dynamic of the component",
             slot ? slot->span : Span{});
      return std::nullopt;
    };
    for (const auto* e : ct_.compositions(cls)) {
      if (e->slots.size() != 3) continue;
      Transition t;
      t.name = e->name;
      auto src = endpoint(e->slots[0], e->name);
      auto dst = endpoint(e->slots[2], e->name);
      if (!src || !dst) continue;
      t.source = *src;
      t.target = *dst;
      const auto& act = e->slots[1];
      if (act && !act->is<SkipExpr>()) {
        const auto* n = act->as<Name>();
        t.action = -2;
        for (std::size_t i = 0; n && i < c.actions.size(); ++i)
          if (c.actions[i].name == n->id) t.action = c.actions[i].object ? static_cast<int>(i) : -1;
        if (t.action == -2) {
          report("composition.endpoint", c.name + "." + e->name + ": action is not an Assignment of the component",
                 act->span);
          continue;
        }
      }
      for (const auto& b : e->body)
        if (const auto* blk = b->as<BlockStmt>(); blk && blk->kind == BlockKind::Condition)
          for (const auto& item : blk->items) t.condition.push_back(item);
      t.span = act ? act->span : (e->slots[0] ? e->slots[0]->span : Span{});
      c.transitions.push_back(std::move(t));
    }
  }

  HybridModel& m_;
  sos::Engine& eng_;
  const ClassTable& ct_;
  Report& diags_;
};

}  // namespace

FlattenResult flatten(std::shared_ptr<const ClassTable> classes, const std::string& system,
                      const eval::ExternalRegistry* externals) {
  FlattenResult r;
  HybridModel m;
  m.classes = std::move(classes);
  m.externals = externals;
  m.system_name = system;
  if (!m.classes->find(system) || m.classes->interface_of(system) != BuiltinInterface::System) {
    r.diagnostics.push_back(Diagnostic{Severity::Error, "class.unknown", "no System class named '" + system + "'", {}, {}});
    return r;
  }
  try {
    sos::Engine eng(*m.classes, m.store, externals);
    eng.set_log(&m.init_log);
    m.system = eng.instantiate(system, Prefix::root("system"));
    auto init = eng.run_init(m.system, Prefix::root("system"));

    Flattener f(m, eng, r.diagnostics);
    f.components_of(m.system, std::nullopt, "");

    for (const auto& s : init.starts) {
      const int ci = m.component_index(s.component);
      if (ci < 0) continue;
      auto& comp = m.components[ci];
      for (std::size_t i = 0; i < comp.dynamics.size(); ++i)
        if (comp.dynamics[i].object == s.dynamic) comp.initial = Endpoint{Endpoint::Kind::Dynamic, static_cast<int>(i)};
    }
    for (const auto& c : m.components)
      if (!c.parent && !c.initial)
        r.diagnostics.push_back(Diagnostic{Severity::Error, "init.missing-start",
                                           "Init() starts no dynamic of component '" + c.name + "'", {}, {}});

    for (const auto& decl : eng.sync_decls()) {
      SyncPair pair;
      pair.span = decl.span;
      bool ok = true;
      for (const auto& [obj, name] : decl.members) {
        const int ci = m.component_index(obj);
        int ti = -1;
        if (ci >= 0)
          for (std::size_t i = 0; i < m.components[ci].transitions.size(); ++i)
            if (m.components[ci].transitions[i].name == name) ti = static_cast<int>(i);
        if (ti < 0) {
          r.diagnostics.push_back(Diagnostic{Severity::Error, "sync.missing-composition",
                                             "synchronised composition '" + name + "' does not exist", decl.span, {}});
          ok = false;
        } else {
          pair.members.emplace_back(ci, ti);
        }
      }
      if (ok && pair.members.size() >= 2) m.syncs.push_back(std::move(pair));
    }
    init.config.store = m.store;
    m.initial = std::move(init.config);
  } catch (const sos::SosError& e) {
    r.diagnostics.push_back(Diagnostic{Severity::Error, e.rule_id(), e.what(), e.span(), {}});
  } catch (const eval::EvalError& e) {
    r.diagnostics.push_back(Diagnostic{Severity::Error, std::string(eval::rule_id(e.kind())), e.what(), e.span(), {}});
  }
  if (!has_errors(r.diagnostics)) r.model = std::move(m);
  return r;
}

}  // namespace apricot::analysis

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apricot/core/ast.hpp"
#include "apricot/core/classes.hpp"
#include "apricot/core/config.hpp"
#include "apricot/core/source.hpp"
#include "apricot/core/store.hpp"
#include "apricot/eval/eval.hpp"
#include "apricot/sos/engine.hpp"

namespace apricot::analysis {

using Report = std::vector<Diagnostic>;

/// Name resolution and typing of every class body. Calls to functions that are
/// neither built-in, user methods nor in `externals` are reported.
Report resolve_and_typecheck(const ClassTable& classes, const eval::ExternalRegistry* externals = nullptr);

/// MVCB checks per implemented interface: required methods, fields, cardinalities,
/// composition endpoints, block placement, Init starts and sync declarations.
Report check_interface_conformance(const ClassTable& classes);

/// Every equation of every Dynamic owned by `controller` must read `dot(x,1) == 1`.
Report check_clock_constraint(const ClassTable& classes, const std::string& controller);

/// Design-by-convention rewriting; idempotent.
ast::CompilationUnit normalize_dbc(const ast::CompilationUnit& unit);

/// First-order equation `var' = rhs`. Chain equations read `rhs_slot` instead of `rhs`.
struct Ode {
  Location var;
  ast::ExprPtr rhs;
  std::optional<Location> rhs_slot;
  ObjectId self;
  std::string name;
};

struct DynamicMode {
  std::string name;
  ObjectId object;
  std::vector<Ode> odes;
  std::vector<ast::ExprPtr> invariant;  // conjunction; empty means True
};

struct Action {
  std::string name;
  std::optional<ObjectId> object;  // empty for Skip
  const ast::Method* discrete = nullptr;
  sos::DiscreteMode mode = sos::DiscreteMode::Parallel;
};

/// A composition endpoint: one of the component's dynamics or its subsystem.
struct Endpoint {
  enum class Kind { Dynamic, Subsystem } kind = Kind::Dynamic;
  int index = 0;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct Transition {
  std::string name;
  Endpoint source;
  int action = -1;  // index into Component::actions, -1 for Skip
  Endpoint target;
  std::vector<ast::ExprPtr> condition;  // conjunction; empty means True
  Span span;
};

struct Variable {
  std::string name;  // `component.var`
  Location loc;
};

struct Component {
  std::string name;
  ObjectId object;
  BuiltinInterface kind = BuiltinInterface::Plant;
  std::vector<DynamicMode> dynamics;
  std::vector<Action> actions;
  std::vector<Transition> transitions;
  std::optional<Endpoint> initial;
  Location tw;
  std::vector<Variable> variables;  // continuous variables, chain slots last
  /// Index into HybridModel::subsystems of the System this Plant owns.
  std::optional<int> subsystem;
  /// Set for the components of a subsystem: index of the owning component.
  std::optional<int> parent;
};

struct Subsystem {
  std::string name;  // field name inside the owning plant
  ObjectId object;
  int owner = 0;
  std::vector<int> components;
};

/// One synchronised jump: (component, transition) pairs that fire together.
struct SyncPair {
  std::vector<std::pair<int, int>> members;
  Span span;
};

struct HybridModel {
  std::shared_ptr<const ClassTable> classes;
  const eval::ExternalRegistry* externals = nullptr;
  std::string system_name;
  ObjectId system;
  Store store;  // after construction and Init
  std::vector<Component> components;
  std::vector<Subsystem> subsystems;
  std::vector<SyncPair> syncs;
  std::vector<StepRecord> init_log;
  Configuration initial;

  int component_index(ObjectId obj) const;
};

struct FlattenResult {
  std::optional<HybridModel> model;
  Report diagnostics;
};

/// Instantiates `system`, runs its Init and lowers the object graph to a HybridModel.
FlattenResult flatten(std::shared_ptr<const ClassTable> classes, const std::string& system,
                      const eval::ExternalRegistry* externals = nullptr);

/// Names of the top-level classes implementing System.
std::vector<std::string> system_classes(const ClassTable& classes);

struct Analysis {
  ast::CompilationUnit normalized;
  std::shared_ptr<const ClassTable> classes;  // over `normalized`
  Report diagnostics;
  bool ok() const { return !has_errors(diagnostics); }
};

/// Type checking, conformance and normalisation in one pass over a parsed unit.
Analysis analyze(const ast::CompilationUnit& unit, const eval::ExternalRegistry* externals = nullptr);

}  // namespace apricot::analysis

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apricot/analyzer/analyzer.hpp"
#include "apricot/sim/trace.hpp"

namespace apricot::sim {

enum class Policy { Eager, Lazy, Random, Explore };

std::optional<Policy> policy_from(std::string_view name);
std::string_view to_string(Policy p);

struct SimConfig {
  double t_end = 10.0;
  double dt = 1e-3;
  double event_tol = 1e-9;
  double value_tol = 1e-9;
  Policy policy = Policy::Eager;
  std::uint64_t seed = 0;
  int max_jumps_per_instant = 16;
  int max_jumps = 64;      // explore: jumps along one branch
  int max_branches = 64;   // explore: leaves in the tree
  bool step_log = false;   // collect SOS step records of every jump

  /// nullopt when usable, otherwise the offending field.
  std::optional<std::string> validate() const;
};

/// Simulation failure tagged with a rule-id (`sim.zeno`, `write-conflict`, `eval.numeric-overflow`, ...).
class SimError : public std::runtime_error {
 public:
  SimError(std::string rule_id, const std::string& message, Span span = {})
      : std::runtime_error(message), rule_id_(std::move(rule_id)), span_(span) {}
  const std::string& rule_id() const { return rule_id_; }
  const Span& span() const { return span_; }

 private:
  std::string rule_id_;
  Span span_;
};

struct ComponentState {
  std::optional<analysis::Endpoint> active;  // empty for an inactive subsystem component
  bool waiting = false;
};

struct SimState {
  double time = 0.0;
  std::int64_t grid = 0;  // index of the last grid point reached
  Store store;
  std::vector<ComponentState> comps;
  /// Items that fired; not offered again until their guard turns false.
  std::set<std::pair<int, int>> latched;
  /// Items passed over by a `continue` choice; offered again at a border or once their guard turns false.
  std::set<std::pair<int, int>> declined;
  int jumps_at_instant = 0;
  int total_jumps = 0;
  bool check_border = true;  // set at event instants and after jumps
  std::mt19937_64 rng;
};

/// A composition relationship ready to fire: one (component, transition) pair, or all members of a sync pair.
struct Item {
  int sync = -1;
  std::vector<std::pair<int, int>> members;
  std::string name;  // `ball.CompMJ`, `god.CompIR||ball.CompMJ`
  std::pair<int, int> key() const { return sync >= 0 ? std::pair{-1 - sync, 0} : members.front(); }
};

/// One alternative at a decision instant.
struct Option {
  std::optional<Item> item;  // empty: keep flowing
  std::string label() const { return item ? item->name : "continue"; }
};

class Simulator {
 public:
  Simulator(const analysis::HybridModel& model, SimConfig cfg);

  const SimConfig& config() const { return cfg_; }
  const analysis::HybridModel& model() const { return *model_; }

  SimState initial_state() const;

  /// Advance every flowing component by `h` with one RK4 step; waiting components advance tw only.
  void integrate_step(SimState& s, double h) const;

  /// Earliest time in (t, t+dt] at which the component's invariant fails, if it does.
  std::optional<double> check_invariant_horizon(const SimState& s, int comp, double dt) const;

  /// Items whose source is active, whose guard holds and whose action leads into the target invariant.
  std::vector<Item> valid_compositions(const SimState& s) const;

  /// Executes the actions (parallel pre-state semantics across sync members) and switches dynamics.
  void apply_jump(SimState& s, const Item& item, Trace* trace) const;

  /// Runs the configured policy (not explore) from Init to t_end.
  Trace simulate() const;

  struct ExploreNode {
    int id = 0;
    int parent = -1;
    std::string label;
    double time = 0.0;
  };
  struct ExploreResult {
    std::vector<ExploreNode> nodes;
    std::vector<std::pair<int, Trace>> leaves;  // node id, trace of the path
    bool truncated = false;
  };
  /// Depth-first enumeration of every choice, bounded by max_jumps and max_branches.
  ExploreResult explore() const;

  // -- building blocks --
  Trace empty_trace() const;
  void record_sample(const SimState& s, Trace& t) const;
  bool at_border(const SimState& s, int comp) const;
  bool invariant_holds(const SimState& s, int comp, bool tolerant) const;
  bool guard_holds(const SimState& s, int comp, int transition) const;

  /// Options at the current instant under the active policy.
  std::vector<Option> options(SimState& s, Trace& trace) const;
  void take(SimState& s, const Option& o, const std::vector<Option>& all, Trace& trace) const;

  enum class Stop { Finished, Choice, Budget };
  /// Steps until t_end; with `stop_on_choice`, returns at the first instant offering ≥2 options.
  Stop advance(SimState& s, Trace& trace, bool stop_on_choice, std::vector<Option>* choice = nullptr) const;

 private:
  struct Flow;
  std::vector<Flow> flows(const SimState& s) const;
  void rk4(Store& store, const std::vector<Flow>& f, double h) const;
  std::vector<double> snapshot(const SimState& s) const;
  bool flowing(const SimState& s, int comp) const;

  const analysis::HybridModel* model_;
  SimConfig cfg_;
  bool tw_in_guards_ = false;
};

}  // namespace apricot::sim

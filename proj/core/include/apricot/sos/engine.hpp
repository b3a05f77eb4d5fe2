#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apricot/core/ast.hpp"
#include "apricot/core/classes.hpp"
#include "apricot/core/config.hpp"
#include "apricot/core/store.hpp"
#include "apricot/eval/eval.hpp"

namespace apricot::sos {

/// Runtime failure of the discrete fragment, tagged with a rule-id.
class SosError : public std::runtime_error {
 public:
  SosError(std::string rule_id, const std::string& message, Span span)
      : std::runtime_error(message), rule_id_(std::move(rule_id)), span_(span) {}
  const std::string& rule_id() const { return rule_id_; }
  const Span& span() const { return span_; }

 private:
  std::string rule_id_;
  Span span_;
};

enum class DiscreteMode { Sequential, Parallel };

/// `a.CompX || b.CompY` as executed by a constructor: the resolved component objects.
struct SyncDecl {
  std::vector<std::pair<ObjectId, std::string>> members;
  Span span;
};

/// `x.d.start()` as executed by an Init: owning component and dynamic object.
struct StartRecord {
  ObjectId component;
  ObjectId dynamic;
  std::string label;
  Span span;
};

struct InitResult {
  Configuration config;
  std::vector<StartRecord> starts;
};

/// Executes declarations, assignments, method calls and object creation over a
/// Store, emitting one StepRecord per statement when logging is enabled.
class Engine : public eval::Invoker {
 public:
  Engine(const ClassTable& classes, Store& store, const eval::ExternalRegistry* externals = nullptr);

  void set_frame_limit(std::size_t limit) { frame_limit_ = limit; }
  void set_time(double t) { time_ = t; }
  /// Step records are appended to `log` (null disables recording).
  void set_log(std::vector<StepRecord>* log) { log_ = log; }

  Store& store() { return *store_; }
  const ClassTable& classes() const { return *classes_; }
  const std::vector<SyncDecl>& sync_decls() const { return syncs_; }

  eval::EvalContext context(ObjectId self, bool use_locals = false);

  /// Instantiate the top-level system class with its zero-arity constructor.
  ObjectId instantiate(const std::string& class_name, const Prefix& prefix);

  void exec_single_assignment(const ast::Expr& lhs, const ast::Expr& rhs, eval::EvalContext& ctx, const Prefix& prefix);
  /// Sequential chaining or parallel (entry-store) semantics; parallel writes to one location raise WriteConflict.
  void exec_discrete(const std::vector<ast::StmtPtr>& body, DiscreteMode mode, eval::EvalContext& ctx, const Prefix& prefix);

  /// Runs a method: fresh frame, parameters bound by type, body, then end_method.
  Value invoke_method(const Prefix& prefix, ObjectId target, const ast::Method& m,
                      const std::vector<ast::ExprPtr>& args, eval::EvalContext& caller, Span span);

  void declare_variable(const ast::VarDecl& decl, eval::EvalContext& ctx, bool instance, const Prefix& prefix);

  /// Init of the system object; start() calls are collected rather than executed.
  InitResult run_init(ObjectId system, const Prefix& prefix);

  // Invoker
  bool has_method(ObjectId target, const std::string& name) const override;
  Value call_method(eval::EvalContext& caller, ObjectId target, const std::string& name,
                    const std::vector<ast::ExprPtr>& args, Span span) override;
  Value create_object(eval::EvalContext& caller, const ast::New& creation, Span span) override;

  /// Write with constancy check and Integer-to-Real widening; records the delta.
  void write(Location loc, Value v, Span span, std::vector<StoreWrite>& writes);

 private:
  struct Activation {
    Prefix prefix;
    bool constructor = false;
    std::optional<Value> returned;
    std::vector<StartRecord>* starts = nullptr;
    const ast::Method* method = nullptr;
  };

  void exec_body(const std::vector<ast::StmtPtr>& body, eval::EvalContext& ctx, Activation& act);
  void exec_statement(const ast::Stmt& s, eval::EvalContext& ctx, Activation& act);
  void record(const Prefix& prefix, std::string rule, std::vector<StoreWrite> writes);
  Value initial_value(const ast::ExprPtr& init, const SemType& declared, eval::EvalContext& ctx, SemType& recorded);

  const ClassTable* classes_;
  Store* store_;
  const eval::ExternalRegistry* externals_;
  std::vector<StepRecord>* log_ = nullptr;
  std::vector<SyncDecl> syncs_;
  std::vector<Activation*> activations_;
  std::vector<StartRecord>* pending_starts_ = nullptr;
  std::size_t frame_limit_ = 1024;
  std::size_t depth_ = 0;
  double time_ = 0.0;
};

/// Label used in prefixes for a call: `init()`, `new Moving(height, velocity, g)`.
std::string call_label(const std::string& name, const std::vector<ast::ExprPtr>& args);

}  // namespace apricot::sos

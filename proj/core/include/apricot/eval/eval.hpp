#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apricot/core/ast.hpp"
#include "apricot/core/interval.hpp"
#include "apricot/core/store.hpp"

namespace apricot::eval {

enum class ErrorKind {
  DivisionByZero,
  NullOperand,
  DomainError,
  UnknownFunction,
  ArityMismatch,
  InfArithmetic,
  TypeMismatch,
  UnknownName,
  NumericOverflow,
};

/// Stable rule-id such as `eval.division-by-zero`.
std::string_view rule_id(ErrorKind k);

class EvalError : public std::runtime_error {
 public:
  EvalError(ErrorKind kind, const std::string& message, Span span)
      : std::runtime_error(message), kind_(kind), span_(span) {}
  ErrorKind kind() const { return kind_; }
  const Span& span() const { return span_; }

 private:
  ErrorKind kind_;
  Span span_;
};

// ---- built-in function library ------------------------------------------

enum class BuiltinResult { Real, Integer, LikeArgs };

struct BuiltinInfo {
  std::string_view name;
  std::size_t min_arity;
  std::size_t max_arity;  // SIZE_MAX for variadic
  BuiltinResult result;
};

const BuiltinInfo* find_builtin(std::string_view name);
const std::vector<BuiltinInfo>& builtins();

/// Applies a library function to already evaluated arguments.
Value eval_builtin(std::string_view name, const std::vector<Value>& args, Span span = {});

// ---- evaluation context ---------------------------------------------------

struct EvalContext;

/// Host for the parts of evaluation that need the statement engine: method
/// calls (arguments are passed unevaluated for call-by-name) and object creation.
class Invoker {
 public:
  virtual ~Invoker() = default;
  virtual bool has_method(ObjectId target, const std::string& name) const = 0;
  virtual Value call_method(EvalContext& caller, ObjectId target, const std::string& name,
                            const std::vector<ast::ExprPtr>& args, Span span) = 0;
  virtual Value create_object(EvalContext& caller, const ast::New& creation, Span span) = 0;
};

/// Designer-supplied functions, consulted after built-ins and user methods.
class ExternalRegistry {
 public:
  using Callback = std::function<Value(const std::vector<Value>& args, EvalContext& caller)>;
  struct Entry {
    std::size_t arity;
    Callback fn;
    std::string text;
  };

  void define(const std::string& name, std::size_t arity, Callback fn, std::string text = {});
  /// `params[i]` names the i-th argument inside `body`; any other name is looked up
  /// in the caller's scope at call time.
  void define_expression(const std::string& name, std::vector<std::string> params, ast::ExprPtr body,
                         std::string text = {});
  const Entry* find(const std::string& name) const;
  std::vector<std::string> names() const;
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, Entry> entries_;
};

struct EvalContext {
  Store* store = nullptr;
  ObjectId self;
  bool use_locals = true;
  const ExternalRegistry* externals = nullptr;
  Invoker* invoker = nullptr;
  /// Name bindings consulted before the store (parameters of external bindings).
  const std::map<std::string, Value>* overlay = nullptr;
};

Value eval_expr(const ast::Expr& e, EvalContext& ctx);

/// Location denoted by a name, member, index, or `dot(v,n)` (slot created on demand).
Location eval_lvalue(const ast::Expr& e, EvalContext& ctx);

/// Locals (when enabled), then fields of `self` and its enclosing instances.
std::optional<Location> resolve_name(const std::string& name, const EvalContext& ctx);

bool eval_interval_membership(const Value& v, const Interval& i, Span span = {});
Interval eval_interval(const ast::IntervalExpr& iv, EvalContext& ctx);

/// Conjunction of Invariant entries; empty is True.
bool eval_invariant(const std::vector<ast::ExprPtr>& items, EvalContext& ctx);
/// Conjunction of Condition entries; empty is True.
bool eval_condition(const std::vector<ast::ExprPtr>& items, EvalContext& ctx);

/// Numeric view of a value for arithmetic; throws NullOperand / InfArithmetic / TypeMismatch.
double numeric(const Value& v, Span span);

}  // namespace apricot::eval

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "apricot/core/interval.hpp"
#include "apricot/eval/eval.hpp"

namespace apricot::eval {

namespace {

constexpr std::size_t kVariadic = std::numeric_limits<std::size_t>::max();
constexpr double kPoleTolerance = 1e-12;

[[noreturn]] void domain(std::string_view fn, const std::string& why, Span span) {
  throw EvalError(ErrorKind::DomainError, std::string(fn) + ": " + why, span);
}

void require_present(const Value& v, std::string_view fn, Span span) {
  if (v.is_null()) throw EvalError(ErrorKind::NullOperand, std::string(fn) + ": null argument", span);
  if (!v.is_number()) throw EvalError(ErrorKind::TypeMismatch, std::string(fn) + ": numeric argument expected", span);
}

double finite_arg(const Value& v, std::string_view fn, Span span) {
  require_present(v, fn, span);
  if (v.is_infinite()) throw EvalError(ErrorKind::InfArithmetic, std::string(fn) + ": Inf argument", span);
  return v.as_real();
}

/// Integer-valued argument for div/fld/rem/mod/gcd/lcm. Reals must be exactly integral.
std::int64_t integral_arg(const Value& v, std::string_view fn, Span span) {
  require_present(v, fn, span);
  if (v.is_infinite()) throw EvalError(ErrorKind::InfArithmetic, std::string(fn) + ": Inf argument", span);
  if (v.is_integer()) return v.as_integer();
  double d = v.as_real();
  if (std::trunc(d) != d || std::fabs(d) > 9.0e18) domain(fn, "integer-valued argument expected, got " + v.to_string(), span);
  return static_cast<std::int64_t>(d);
}

Value real_result(double r, std::string_view fn, Span span) {
  if (std::isnan(r)) domain(fn, "result is undefined", span);
  if (std::isinf(r)) throw EvalError(ErrorKind::NumericOverflow, std::string(fn) + ": result overflows", span);
  return Value::real(r);
}

Value integer_from_real(double r, std::string_view fn, Span span) {
  if (!(std::fabs(r) < 9.2e18)) throw EvalError(ErrorKind::NumericOverflow, std::string(fn) + ": result overflows", span);
  return Value::integer(static_cast<std::int64_t>(r));
}

std::int64_t checked_abs(std::int64_t v, std::string_view fn, Span span) {
  if (v == std::numeric_limits<std::int64_t>::min())
    throw EvalError(ErrorKind::NumericOverflow, std::string(fn) + ": integer overflow", span);
  return v < 0 ? -v : v;
}

const std::vector<BuiltinInfo> kBuiltins = {
    {"sin", 1, 1, BuiltinResult::Real},      {"cos", 1, 1, BuiltinResult::Real},
    {"tan", 1, 1, BuiltinResult::Real},      {"cot", 1, 1, BuiltinResult::Real},
    {"sec", 1, 1, BuiltinResult::Real},      {"csc", 1, 1, BuiltinResult::Real},
    {"round", 1, 1, BuiltinResult::Integer}, {"floor", 1, 1, BuiltinResult::Integer},
    {"ceil", 1, 1, BuiltinResult::Integer},  {"div", 2, 2, BuiltinResult::Integer},
    {"fld", 2, 2, BuiltinResult::Integer},   {"rem", 2, 2, BuiltinResult::Integer},
    {"mod", 2, 2, BuiltinResult::Integer},   {"gcd", 1, kVariadic, BuiltinResult::Integer},
    {"lcm", 1, kVariadic, BuiltinResult::Integer}, {"abs", 1, 1, BuiltinResult::LikeArgs},
    {"sign", 1, 1, BuiltinResult::Integer},  {"sqrt", 1, 1, BuiltinResult::Real},
    {"root", 2, 2, BuiltinResult::Real},     {"hypot", 2, 2, BuiltinResult::Real},
    {"pow", 2, 2, BuiltinResult::Real},      {"exp", 1, 1, BuiltinResult::Real},
    {"log", 1, 2, BuiltinResult::Real},      {"erf", 1, 1, BuiltinResult::Real},
    {"gamma", 1, 1, BuiltinResult::Real},    {"max", 1, kVariadic, BuiltinResult::LikeArgs},
    {"min", 1, kVariadic, BuiltinResult::LikeArgs},
};

Value extremum(const std::vector<Value>& args, bool want_max, std::string_view fn, Span span) {
  for (const auto& a : args) require_present(a, fn, span);
  const Value* best = &args[0];
  for (const auto& a : args) {
    int c = compare_numbers(a, *best);
    if (want_max ? c > 0 : c < 0) best = &a;
  }
  bool all_int = std::all_of(args.begin(), args.end(), [](const Value& v) { return v.is_integer(); });
  if (best->is_infinite() || all_int) return *best;
  return Value::real(best->as_real());
}

}  // namespace

const std::vector<BuiltinInfo>& builtins() { return kBuiltins; }

const BuiltinInfo* find_builtin(std::string_view name) {
  for (const auto& b : kBuiltins)
    if (b.name == name) return &b;
  return nullptr;
}

Value eval_builtin(std::string_view fn, const std::vector<Value>& args, Span span) {
  const BuiltinInfo* info = find_builtin(fn);
  if (!info) throw EvalError(ErrorKind::UnknownFunction, "unknown function '" + std::string(fn) + "'", span);
  if (args.size() < info->min_arity || args.size() > info->max_arity)
    throw EvalError(ErrorKind::ArityMismatch,
                    std::string(fn) + ": wrong number of arguments (" + std::to_string(args.size()) + ")", span);

  auto x = [&](std::size_t i) { return finite_arg(args[i], fn, span); };

  if (fn == "sin") return real_result(std::sin(x(0)), fn, span);
  if (fn == "cos") return real_result(std::cos(x(0)), fn, span);
  if (fn == "tan") return real_result(std::tan(x(0)), fn, span);
  if (fn == "cot" || fn == "csc") {
    double s = std::sin(x(0));
    if (std::fabs(s) < kPoleTolerance) domain(fn, "argument at a pole", span);
    return real_result(fn == "cot" ? std::cos(x(0)) / s : 1.0 / s, fn, span);
  }
  if (fn == "sec") {
    double c = std::cos(x(0));
    if (std::fabs(c) < kPoleTolerance) domain(fn, "argument at a pole", span);
    return real_result(1.0 / c, fn, span);
  }

  if (fn == "round" || fn == "floor" || fn == "ceil") {
    if (args[0].is_integer()) return args[0];
    double v = x(0);
    double r = fn == "round" ? std::round(v) : fn == "floor" ? std::floor(v) : std::ceil(v);
    return integer_from_real(r, fn, span);
  }

  if (fn == "div" || fn == "fld" || fn == "rem" || fn == "mod") {
    std::int64_t a = integral_arg(args[0], fn, span), b = integral_arg(args[1], fn, span);
    if (b == 0) throw EvalError(ErrorKind::DivisionByZero, std::string(fn) + ": zero divisor", span);
    if (a == std::numeric_limits<std::int64_t>::min() && b == -1)
      throw EvalError(ErrorKind::NumericOverflow, std::string(fn) + ": integer overflow", span);
    std::int64_t q = a / b, r = a % b;  // truncated
    if (fn == "div") return Value::integer(q);
    if (fn == "rem") return Value::integer(r);
    bool adjust = r != 0 && ((r < 0) != (b < 0));
    if (fn == "fld") return Value::integer(adjust ? q - 1 : q);
    return Value::integer(adjust ? r + b : r);
  }

  if (fn == "gcd" || fn == "lcm") {
    std::vector<std::int64_t> xs;
    for (const auto& a : args) xs.push_back(integral_arg(a, fn, span));
    std::int64_t acc = checked_abs(xs[0], fn, span);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      std::int64_t v = checked_abs(xs[i], fn, span);
      if (fn == "gcd") {
        acc = std::gcd(acc, v);
      } else {
        if (acc == 0 || v == 0) {
          acc = 0;
          continue;
        }
        std::int64_t g = std::gcd(acc, v);
        std::int64_t out = 0;
        if (__builtin_mul_overflow(acc / g, v, &out))
          throw EvalError(ErrorKind::NumericOverflow, std::string(fn) + ": integer overflow", span);
        acc = out;
      }
    }
    return Value::integer(xs[0] < 0 ? -acc : acc);
  }

  if (fn == "abs") {
    require_present(args[0], fn, span);
    if (args[0].is_infinite()) return Value::inf();
    if (args[0].is_integer()) return Value::integer(checked_abs(args[0].as_integer(), fn, span));
    return Value::real(std::fabs(args[0].as_real()));
  }
  if (fn == "sign") {
    require_present(args[0], fn, span);
    int c = compare_numbers(args[0], Value::integer(0));
    return Value::integer(c);
  }

  if (fn == "sqrt") {
    double v = x(0);
    if (v < 0) domain(fn, "negative argument", span);
    return Value::real(std::sqrt(v));
  }
  if (fn == "root") {
    double v = x(0), b = x(1);
    if (b == 0) domain(fn, "zeroth root", span);
    if (v < 0) {
      bool odd_integer = std::trunc(b) == b && std::fmod(std::fabs(b), 2.0) == 1.0;
      if (!odd_integer) domain(fn, "negative argument with even or fractional degree", span);
      return real_result(-std::pow(-v, 1.0 / b), fn, span);
    }
    if (v == 0 && b < 0) domain(fn, "zero argument with negative degree", span);
    return real_result(std::pow(v, 1.0 / b), fn, span);
  }
  if (fn == "hypot") return real_result(std::hypot(x(0), x(1)), fn, span);
  if (fn == "pow") {
    double a = x(0), b = x(1);
    if (a == 0 && b < 0) domain(fn, "zero raised to a negative power", span);
    if (a < 0 && std::trunc(b) != b) domain(fn, "negative base with fractional exponent", span);
    return real_result(std::pow(a, b), fn, span);
  }
  if (fn == "exp") return real_result(std::exp(x(0)), fn, span);
  if (fn == "log") {
    if (args.size() == 1) {
      double v = x(0);
      if (v <= 0) domain(fn, "non-positive argument", span);
      return Value::real(std::log(v));
    }
    double b = x(0), v = x(1);
    if (b <= 0 || b == 1) domain(fn, "invalid base", span);
    if (v <= 0) domain(fn, "non-positive argument", span);
    return real_result(std::log(v) / std::log(b), fn, span);
  }
  if (fn == "erf") {
    require_present(args[0], fn, span);
    if (args[0].is_inf()) return Value::real(1.0);
    if (args[0].is_neg_inf()) return Value::real(-1.0);
    return Value::real(std::erf(args[0].as_real()));
  }
  if (fn == "gamma") {
    double v = x(0);
    if (v <= 0 && std::trunc(v) == v) domain(fn, "pole at a non-positive integer", span);
    return real_result(std::tgamma(v), fn, span);
  }
  if (fn == "max") return extremum(args, true, fn, span);
  if (fn == "min") return extremum(args, false, fn, span);
  throw EvalError(ErrorKind::UnknownFunction, "unknown function '" + std::string(fn) + "'", span);
}

}  // namespace apricot::eval

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace apricot {

struct Location {
  std::uint32_t index = 0;
  friend bool operator==(Location, Location) = default;
  friend auto operator<=>(Location, Location) = default;
};

struct ObjectId {
  std::uint32_t index = 0;
  friend bool operator==(ObjectId, ObjectId) = default;
  friend auto operator<=>(ObjectId, ObjectId) = default;
};

struct NullValue {
  friend bool operator==(NullValue, NullValue) = default;
};
struct PosInf {
  friend bool operator==(PosInf, PosInf) = default;
};
struct NegInf {
  friend bool operator==(NegInf, NegInf) = default;
};
struct Reference {
  ObjectId id;
  friend bool operator==(const Reference&, const Reference&) = default;
};
struct ArrayValue {
  std::vector<Location> elems;
  friend bool operator==(const ArrayValue&, const ArrayValue&) = default;
};

/// Runtime value. Reals are binary64, Integers signed 64-bit. Inf and -Inf are
/// distinct variants so that their comparison laws do not depend on IEEE infinities.
class Value {
 public:
  using Repr = std::variant<NullValue, double, std::int64_t, bool, PosInf, NegInf, Reference, ArrayValue>;

  Value() = default;
  static Value null() { return Value(NullValue{}); }
  static Value real(double v) { return Value(v); }
  static Value integer(std::int64_t v) { return Value(v); }
  static Value boolean(bool v) { return Value(v); }
  static Value inf() { return Value(PosInf{}); }
  static Value neg_inf() { return Value(NegInf{}); }
  static Value ref(ObjectId id) { return Value(Reference{id}); }
  static Value array(std::vector<Location> elems) { return Value(ArrayValue{std::move(elems)}); }

  bool is_null() const { return std::holds_alternative<NullValue>(repr_); }
  bool is_real() const { return std::holds_alternative<double>(repr_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(repr_); }
  bool is_boolean() const { return std::holds_alternative<bool>(repr_); }
  bool is_inf() const { return std::holds_alternative<PosInf>(repr_); }
  bool is_neg_inf() const { return std::holds_alternative<NegInf>(repr_); }
  bool is_infinite() const { return is_inf() || is_neg_inf(); }
  bool is_finite_number() const { return is_real() || is_integer(); }
  bool is_number() const { return is_finite_number() || is_infinite(); }
  bool is_ref() const { return std::holds_alternative<Reference>(repr_); }
  bool is_array() const { return std::holds_alternative<ArrayValue>(repr_); }

  double as_real() const;  // Real or Integer, widened
  std::int64_t as_integer() const { return std::get<std::int64_t>(repr_); }
  bool as_boolean() const { return std::get<bool>(repr_); }
  ObjectId as_ref() const { return std::get<Reference>(repr_).id; }
  const std::vector<Location>& as_array() const { return std::get<ArrayValue>(repr_).elems; }

  const Repr& repr() const { return repr_; }

  /// Short human-readable form: `null`, `Inf`, `-Inf`, `True`, `#3`, `{@1,@2}`, or the number
  /// with 17 significant digits.
  std::string to_string() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  template <class T>
  explicit Value(T v) : repr_(std::move(v)) {}
  Repr repr_;
};

/// 17-significant-digit rendering used by every trace format.
std::string format_real(double v);

}  // namespace apricot

template <>
struct std::hash<apricot::Location> {
  std::size_t operator()(apricot::Location l) const noexcept { return std::hash<std::uint32_t>{}(l.index); }
};

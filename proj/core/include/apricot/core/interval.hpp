#pragma once

#include <optional>
#include <string>

#include "apricot/core/value.hpp"

namespace apricot {

/// Numeric interval with bracket openness. An open bracket is only legal against
/// the matching infinity, and an infinite endpoint must use the open bracket.
struct Interval {
  Value lo;
  Value hi;
  bool lo_open = false;
  bool hi_open = false;

  /// nullopt when valid, otherwise a short reason.
  std::optional<std::string> validate() const;
  bool valid() const { return !validate().has_value(); }
};

/// Three-way comparison honouring the Inf laws; both operands must be numbers.
/// Returns <0, 0, >0.
int compare_numbers(const Value& a, const Value& b);

}  // namespace apricot

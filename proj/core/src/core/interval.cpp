#include "apricot/core/interval.hpp"

#include <stdexcept>

namespace apricot {

int compare_numbers(const Value& a, const Value& b) {
  if (!a.is_number() || !b.is_number()) throw std::invalid_argument("compare_numbers: non-numeric operand");
  auto rank = [](const Value& v) { return v.is_neg_inf() ? -1 : v.is_inf() ? 1 : 0; };
  int ra = rank(a), rb = rank(b);
  if (ra != 0 || rb != 0) return ra - rb;
  if (a.is_integer() && b.is_integer()) {
    auto x = a.as_integer(), y = b.as_integer();
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  double x = a.as_real(), y = b.as_real();
  return x < y ? -1 : (x > y ? 1 : 0);
}

std::optional<std::string> Interval::validate() const {
  if (!lo.is_number() || !hi.is_number()) return "interval bounds must be numbers";
  if (lo_open && !lo.is_neg_inf()) return "finite open bound: '(' requires -Inf";
  if (hi_open && !hi.is_inf()) return "finite open bound: ')' requires Inf";
  if (!lo_open && lo.is_infinite()) return "infinite closed bound: use '(' with -Inf";
  if (!hi_open && hi.is_infinite()) return "infinite closed bound: use ')' with Inf";
  if (lo.is_inf() || hi.is_neg_inf()) return "interval bounds out of order";
  if (compare_numbers(lo, hi) > 0) return "interval bounds out of order";
  return std::nullopt;
}

}  // namespace apricot

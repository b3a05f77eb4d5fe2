#include "apricot/core/value.hpp"

#include <cstdio>

namespace apricot {

double Value::as_real() const {
  if (const auto* i = std::get_if<std::int64_t>(&repr_)) return static_cast<double>(*i);
  return std::get<double>(repr_);
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Value::to_string() const {
  struct Visitor {
    std::string operator()(NullValue) const { return "null"; }
    std::string operator()(double d) const { return format_real(d); }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "True" : "False"; }
    std::string operator()(PosInf) const { return "Inf"; }
    std::string operator()(NegInf) const { return "-Inf"; }
    std::string operator()(const Reference& r) const { return "#" + std::to_string(r.id.index); }
    std::string operator()(const ArrayValue& a) const {
      std::string out = "{";
      for (std::size_t i = 0; i < a.elems.size(); ++i) {
        if (i) out += ',';
        out += '@' + std::to_string(a.elems[i].index);
      }
      return out + '}';
    }
  };
  return std::visit(Visitor{}, repr_);
}

}  // namespace apricot

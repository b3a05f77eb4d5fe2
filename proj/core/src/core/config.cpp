#include "apricot/core/config.hpp"

#include <stdexcept>

namespace apricot {

Prefix Prefix::extend(std::string step) const {
  Prefix out = *this;
  out.segments_.push_back(std::move(step));
  return out;
}

Prefix Prefix::pop() const {
  if (segments_.size() <= 1) throw std::logic_error("Prefix: cannot pop the system head");
  Prefix out = *this;
  out.segments_.pop_back();
  return out;
}

std::string Prefix::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out += '.';
    out += segments_[i];
  }
  return out;
}

std::string format_step(const StepRecord& r) {
  std::string out = "t=" + format_real(r.time) + ' ' + r.prefix.to_string() + " :: " + r.rule_id + " ::";
  if (r.writes.empty()) out += " -";
  for (const auto& w : r.writes)
    out += " @" + std::to_string(w.location.index) + ':' + w.before.to_string() + "->" + w.after.to_string();
  return out;
}

void replay(Store& store, const std::vector<StepRecord>& records) {
  for (const auto& r : records)
    for (const auto& w : r.writes) store.write(w.location, w.after);
}

}  // namespace apricot

#pragma once

#include <string>
#include <vector>

#include "apricot/core/store.hpp"

namespace apricot {

/// Provenance path `system.init().height=h[1]`: the head names the system, the
/// tail is the statement being executed. Persistent: extend() leaves `*this` intact.
class Prefix {
 public:
  Prefix() = default;
  explicit Prefix(std::vector<std::string> segments) : segments_(std::move(segments)) {}
  static Prefix root(std::string head) { return Prefix({std::move(head)}); }

  Prefix extend(std::string step) const;
  /// Drop the last segment (method end returns to the caller prefix).
  Prefix pop() const;

  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  const std::vector<std::string>& segments() const { return segments_; }
  std::string to_string() const;

  friend bool operator==(const Prefix&, const Prefix&) = default;

 private:
  std::vector<std::string> segments_;
};

struct StoreWrite {
  Location location;
  Value before;
  Value after;
};

/// One executed statement: its prefix, the rule that fired and the store delta.
struct StepRecord {
  Prefix prefix;
  std::string rule_id;
  std::vector<StoreWrite> writes;
  double time = 0.0;
};

/// `t=<sim-time> <prefix> :: <rule-id> :: @loc:old->new ...`
std::string format_step(const StepRecord& r);

/// Replay the deltas of `records` on top of `store`.
void replay(Store& store, const std::vector<StepRecord>& records);

/// Statement set plus state. The type map lives inside the store's cells.
struct Configuration {
  std::vector<Prefix> statements;
  Store store;
};

}  // namespace apricot

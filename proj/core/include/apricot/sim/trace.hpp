#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apricot/core/config.hpp"

namespace apricot::sim {

struct Sample {
  double time = 0.0;
  std::vector<double> values;       // one per numeric column; NaN for Null
  std::vector<std::string> active;  // active mode per component, empty when inactive
};

/// `jump`, `sync-jump`, `invariant-hit`, `flow-stop`.
struct Event {
  double time = 0.0;
  std::string kind;
  std::string name;    // `ball.CompMJ`, `god.CompIR||ball.CompMJ`, `ball.moving`
  std::string prefix;  // `system.ball.CompMJ`
  std::vector<double> pre;
  std::vector<double> post;
};

struct Trace {
  std::vector<std::string> columns;     // `comp.var` and `comp.tw`
  std::vector<std::string> components;  // `@active` columns follow the numeric ones
  std::vector<Sample> samples;
  std::vector<Event> events;
  std::string termination;  // `t_end`, `quiescent`, `budget`
  std::vector<StepRecord> steps;

  std::optional<std::size_t> column(const std::string& name) const;
};

/// `time,comp.var,...,comp.@active` rows.
void write_csv(const Trace& t, std::ostream& out);
/// `time,kind,name,prefix` rows.
void write_events_csv(const Trace& t, std::ostream& out);
/// One JSON object per line with a `type` of `header`, `sample`, `event` or `end`.
void write_jsonl(const Trace& t, std::ostream& out);

/// Parses either format written above; throws std::runtime_error on malformed input.
Trace read_csv(std::istream& in);
Trace read_jsonl(std::istream& in);

/// Keeps `names` (numeric or `@active` columns) in the given order; throws on an unknown name.
Trace select_columns(const Trace& t, const std::vector<std::string>& names);

struct ColumnStats {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double final = 0.0;
};
std::vector<ColumnStats> column_stats(const Trace& t);

}  // namespace apricot::sim

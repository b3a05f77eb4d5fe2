#pragma once

#include <iosfwd>

namespace apricot::cli {

/// Exit codes of the `apricot` tool.
enum Exit : int {
  kOk = 0,
  kParseError = 1,
  kConformanceError = 2,
  kSimulationError = 3,
  kUsageError = 64,
};

/// Runs the command line `argv[0..argc)`; normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace apricot::cli

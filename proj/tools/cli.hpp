#pragma once

#include <ostream>

namespace spd::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

/// Runs one command line. Results go to `out`; failures are reported on `err`
/// as a single JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spd::cli

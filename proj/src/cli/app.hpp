#pragma once

#include <iosfwd>

namespace pflux::cli {

enum ExitCode : int {
  kOk = 0,
  kChecksFailed = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
};

/// Entry point of the pflux executable. Progress goes to `out` unless --quiet, errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pflux::cli

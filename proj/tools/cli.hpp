#pragma once

#include <iosfwd>

namespace survbv::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericalFailure = 3,
};

/// Entry point shared by the survbv executable and the CLI tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace survbv::cli

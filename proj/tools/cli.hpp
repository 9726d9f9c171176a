#pragma once

#include <iosfwd>

namespace tarn::cli {

/// Exit codes are a stable contract.
enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kScenarioFailure = 3,
    kIntegrityFailure = 4,
};

/// Entry point of the `tarn` tool with injectable streams for tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tarn::cli

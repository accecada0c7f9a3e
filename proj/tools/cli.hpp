#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cmdual::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerdictFail = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNumericalFailure = 3;

/// Runs one command line (args exclude the program name). Results go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmdual::cli

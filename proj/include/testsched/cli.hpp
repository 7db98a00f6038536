#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace testsched {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Domain errors are
/// written to `err` as a single JSON object.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace testsched

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hmdetect::cli {

// Exit codes: 0 success, 2 usage or validation error, 1 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// Runs one CLI invocation. args excludes the program name. Data and tables
// go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmdetect::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lateci::cli {

// Process exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;       // bad flags, unreadable or malformed input
inline constexpr int kDegenerate = 3;  // data cannot support the statistic

// Runs the command line `args` (without the program name). Human-readable
// output goes to `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lateci::cli

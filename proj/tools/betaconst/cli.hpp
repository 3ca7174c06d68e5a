#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace betaconst::cli {

// Exit codes: 0 ok, 1 analysis failure, 2 usage / config / I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysis = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace betaconst::cli

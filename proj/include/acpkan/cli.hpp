#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace acpkan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `acpkan` tool. `args` excludes the program name.
/// Subcommands: train, eval, rank-scan, fit-function, gradcheck.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acpkan

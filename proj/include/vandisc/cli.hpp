#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vandisc::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConditionFailed = 2;

// Runs one subcommand. args excludes the program name. Summaries go to out,
// diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace vandisc::cli

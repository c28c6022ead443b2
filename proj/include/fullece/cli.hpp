#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fullece::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Environment variable holding the default classwise cell budget.
inline constexpr const char* kBudgetEnvVar = "FULLECE_MEMORY_BUDGET";

/// Runs the command line `args` (without the program name). Reports go to
/// `out`; errors go to `err` as one JSON line each.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fullece::cli

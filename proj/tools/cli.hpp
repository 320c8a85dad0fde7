#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace permuton::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation. `args` excludes the program name. Normal output goes
/// to `out` (or the --out file), diagnostics to `err`. Long experiments stop
/// early when `cancel` becomes true and flush a partial report.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel = nullptr);

}  // namespace permuton::cli

#pragma once

#include <iosfwd>

namespace ragmat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitRuntime = 4;

/// Parse argv, dispatch one subcommand, and map failures to exit codes.
/// Errors are written to `err` as one JSON object per line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace ragmat::cli

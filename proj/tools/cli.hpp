#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pbc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable consulted for the default `--threads` value.
inline constexpr const char* kThreadsEnv = "PBC_THREADS";

/// Runs the command line `args` (without the program name). Human-readable
/// output goes to `out`, diagnostics to `err`. Returns the process exit code.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pbc::cli

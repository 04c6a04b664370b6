#pragma once

// Command-line front end. run_cli is the whole program minus process exit, so
// tests can drive it in-process.

#include <ostream>
#include <string>
#include <vector>

namespace dea::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// args excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count for bench: DEA_THREADS if set and positive, else the hardware
/// concurrency.
unsigned bench_threads();

}  // namespace dea::cli

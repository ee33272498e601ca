#pragma once

namespace ngash::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

// ngash <subcommand> [flags]; returns the process exit status.
int run(int argc, const char* const* argv);

}  // namespace ngash::cli

#pragma once

#include <iosfwd>

namespace qfc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSynthesis = 3;
inline constexpr int kExitSimulation = 4;

/// Entry point of the `qfc` tool. Subcommands: classify, canonical,
/// synthesize, simulate, demo. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qfc::cli

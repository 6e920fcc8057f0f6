#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crosscheck::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTransport = 4;

/// Entry point of the `crosscheck` tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crosscheck::cli

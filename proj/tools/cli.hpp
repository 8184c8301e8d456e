#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace useq::cli {

// Exit codes of the useq tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data, model or I/O error
inline constexpr int kExitUsage = 2;    // bad flags

// Runs `useq <subcommand> [flags]`. args[0] is the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace useq::cli

#pragma once

#include <string>
#include <vector>

namespace surgctx::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kDeadlineViolation = 3;

// Parses `args` (args[0] is the program name) and runs the subcommand.
// Diagnostics go to stderr, reports to stdout.
int run(const std::vector<std::string>& args);

}  // namespace surgctx::cli

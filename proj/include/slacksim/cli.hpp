#pragma once

#include <string>
#include <vector>

namespace slacksim {

/// Entry point for the slacksim command-line tool. Returns the process exit
/// code: 0 success, 1 runtime/IO failure, 2 usage or configuration error.
int run_cli(int argc, const char* const* argv);

/// Convenience overload for in-process invocation (tests, harnesses).
int run_cli(const std::vector<std::string>& args);

}  // namespace slacksim

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace storynet::cli {

enum ExitCode { kSuccess = 0, kValidationError = 1, kUsageError = 2 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace storynet::cli

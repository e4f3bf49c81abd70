#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eqw::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kInvariant = 2,
};

/// Runs one command line (`args[0]` is the program name). Diagnostics go to
/// `err`, short summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eqw::cli

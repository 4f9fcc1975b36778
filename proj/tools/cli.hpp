#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace invmeas::cli {

enum ExitCode { kSuccess = 0, kCheckFailed = 1, kError = 2 };

/// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace invmeas::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace respire::cli {

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kUsageOrIo = 2 };

/// Runs one command line (args[0] is the program name). Human-readable output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace respire::cli

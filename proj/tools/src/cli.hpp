#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deid::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// One invocation. `args` excludes the program name. Reports go to `out`,
/// key=value log lines and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deid::cli

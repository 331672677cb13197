#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace btcli {

enum ExitCode { kOk = 0, kUsage = 1, kGraph = 2, kCap = 3, kBudget = 4, kNumerical = 5 };

// Parses `args` (without the program name) and runs the selected command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btcli

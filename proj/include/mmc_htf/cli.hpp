#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace htf {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitRuntime = 2,
    kExitTolerance = 3,
};

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace htf

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rubricrank::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitRuntime = 2,
};

// Entry point shared by the rubricrank binary and the tests. args[0] is the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rubricrank::cli

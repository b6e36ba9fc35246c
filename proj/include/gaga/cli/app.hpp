#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gaga::cli {

// Parses `args` (without the program name), runs the requested stage and
// returns the process exit code. Errors are reported on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaga::cli

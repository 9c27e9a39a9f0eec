#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sufstat {

// Runs the command line `args` (without the program name). Returns the
// process exit code: 0 on success, 1 when a library call fails, 2 on flag
// misuse.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sufstat

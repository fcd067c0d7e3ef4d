// The `flam` command line: simulate, solve, eval and spectrum.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flam::cli {

/// Parses `args` (without the program name) and runs the chosen command.
/// Returns the process exit code; messages go to `out` / `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flam::cli

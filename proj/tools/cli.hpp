#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tomo::cli {

// Process exit status. Every code but `ok` means the requested result was
// not fully produced; only `not_converged` still writes its outputs.
enum ExitCode : int {
  ok = 0,
  usage = 1,
  io_error = 2,
  parse_error = 3,
  infeasible = 4,
  not_converged = 5,
  invalid_argument = 6,
};

// Environment variable naming the directory searched for relative input
// paths that do not exist relative to the working directory.
inline constexpr const char* data_dir_variable = "TOMOGRAVITY_DATA_DIR";

// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tomo::cli

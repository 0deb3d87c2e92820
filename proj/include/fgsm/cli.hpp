#pragma once

#include <iosfwd>

namespace fgsm {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_internal = 3 };

/// Runs the `fgsm_lab` command line with the given arguments (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fgsm

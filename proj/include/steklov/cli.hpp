#pragma once

#include <string>
#include <vector>

namespace steklov {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitSolverError = 1, kExitConfigError = 2 };

/// Subcommands: mesh, direct, multigrid, study, compare.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args);

}  // namespace steklov

#pragma once

#include <iosfwd>

namespace spikectl {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitNumerical = 2,
    kExitAcceptance = 3,
};

/// Entry point of the `spikectl` command line: solve, simulate, evaluate,
/// export-policy. Returns one of ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spikectl

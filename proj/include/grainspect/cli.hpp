#ifndef GRAINSPECT_CLI_HPP
#define GRAINSPECT_CLI_HPP

#include <iosfwd>

namespace grainspect {

/// Exit codes of the command-line tool.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Entry point of the `grainspect` tool; tables go to `out`, diagnostics and the
/// effective configuration to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grainspect

#endif  // GRAINSPECT_CLI_HPP

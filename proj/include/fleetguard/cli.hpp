#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fleetguard {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    /// A verification or detection step said no (Reject, anomaly, refused claim).
    kExitNegative = 1,
    /// Bad flags, unreadable input, invalid configuration.
    kExitUsage = 2,
};

/// Runs the command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fleetguard

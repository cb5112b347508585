#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ipdc::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kNotConverged = 4,
};

// Runs `ipdc <subcommand> ...`; args excludes the program name.
// Structured results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ipdc::cli

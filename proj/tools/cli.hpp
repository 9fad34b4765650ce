#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vpe::cli {

enum ExitCode : int {
    ok = 0,
    malformed_config = 1,
    violation = 2,
    stage_failure = 3,
    gate_failure = 4,
};

/// Runs one command line (without the program name). Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest round-trip decimal, always with a fraction or exponent; "inf" for infinity.
std::string format_number(double v);

} // namespace vpe::cli

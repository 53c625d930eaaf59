#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridfactor::cli {

/// Runs the command line `args` (without the program name). Machine output
/// goes to `out`, diagnostics to `err`. Returns 0 on success, 1 for bad input
/// and 2 when the analysis itself fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridfactor::cli

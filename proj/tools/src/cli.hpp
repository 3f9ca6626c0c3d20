#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace face::cli {

// Runs the `face` command line with args (program name excluded). Normal
// output goes to `out`, diagnostics to `err`. Returns the process exit code:
// 0 when the command fulfilled its contract (including "no counterfactual"
// outcomes), nonzero on any error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace face::cli

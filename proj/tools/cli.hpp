#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace superpix::cli {

/// Runs the command line `args` (without the program name). JSON results go to `out`,
/// diagnostics to `err`. Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace superpix::cli

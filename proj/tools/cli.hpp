#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jacopt {

/// The command-line driver. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jacopt

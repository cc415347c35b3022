#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vpr {

/// Exit status: 0 on success, 1 on a pipeline error, 2 on a usage error.
int cli_main(int argc, char** argv);
/// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vpr

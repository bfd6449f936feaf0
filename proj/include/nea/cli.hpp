#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nea::cli {

/// Runs one `nea` invocation. args[0] is the program name. Returns the exit
/// code: 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace nea::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace floodsense::cli {

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace floodsense::cli

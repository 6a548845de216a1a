#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace s2r::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // gradcheck ran but did not pass
  kExitValidation = 2,
  kExitRuntime = 3,
};

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s2r::cli

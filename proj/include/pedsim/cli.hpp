#pragma once

#include <string>
#include <vector>

namespace pedsim {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitRuntime = 2,
  kExitReplayMismatch = 3,
};

// argv[0] is the program name.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace pedsim

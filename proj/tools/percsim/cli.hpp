#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace percsim {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitScenarioFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Entry point shared by main() and the tests. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace percsim

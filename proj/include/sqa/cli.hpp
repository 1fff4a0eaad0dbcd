#pragma once

#include <string>
#include <vector>

namespace sqa::cli {

// Exit codes: 0 success, 1 invalid flags, 2 data validation failure,
// 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

int run(int argc, const char* const* argv);
// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace sqa::cli

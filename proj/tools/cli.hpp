#pragma once

#include <string>
#include <vector>

namespace qudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace qudit::cli

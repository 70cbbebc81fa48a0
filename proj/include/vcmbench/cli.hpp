#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vcmbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitCodec = 3;

// Entry point of the vcm-bench tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vcmbench

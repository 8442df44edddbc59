#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sslus::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses `args` (without the program name) and runs the selected command.
/// Progress goes to `log`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace sslus::cli

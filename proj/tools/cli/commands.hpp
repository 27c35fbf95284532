#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nodef::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `nodef` invocation. `args` excludes the program name. Machine
/// output goes to `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nodef::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unsafety::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitErrors = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name. Data goes to `out`
/// (or to --out), diagnostics and usage messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace unsafety::cli

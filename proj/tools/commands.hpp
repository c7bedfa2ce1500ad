#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace deepir::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitProcessing = 2;

/// Entry point shared by the executable and the CLI tests. Diagnostics go to
/// `err`, machine-readable output (metrics JSON) to `out`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace deepir::cli

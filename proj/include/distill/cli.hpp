#pragma once

// Command-line front end. Exit codes: 0 success, 1 input or validation error,
// 2 a search or check that legitimately found nothing.

#include <iosfwd>
#include <string>
#include <vector>

namespace distill {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotFound = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace distill

#pragma once
// Command-line front end. Exit status: 0 success, 1 verification failure,
// 2 usage error or malformed input.

#include <iosfwd>

namespace coinprune::cli {

inline constexpr int kOk = 0;
inline constexpr int kVerifyFailed = 1;
inline constexpr int kUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coinprune::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace coachsim::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags, missing files).
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

/**
 * Runs the `coachsim` command line. `args` excludes the program name.
 * Failures print exactly one line to `err`: "error: <CODE>: <message>".
 */
int run_cli(std::vector<std::string> const & args, std::ostream & out, std::ostream & err);

} // namespace coachsim::cli

#pragma once

// Command-line front end: solve, oracle, validate and plot subcommands.

#include <iosfwd>

namespace doe {

/// Exit codes: 0 success, 1 input or usage error, 2 solver failure or
/// violations found by validate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace doe

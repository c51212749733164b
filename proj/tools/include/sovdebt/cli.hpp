#pragma once

/// @file cli.hpp
/// @brief The `sovdebt` command line as a callable function.
///
/// Exit codes: 0 success, 1 input or configuration error, 2 numerical failure,
/// 3 verification failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace sovdebt::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalFailure = 2, kVerificationFailure = 3 };

/// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sovdebt::cli

/// @file  cli.hpp
/// @brief Command-line front end. Lives in the library so tests can drive it.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tboost::cli {

/// Runs one command line; returns the process exit status. Data goes to
/// `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tboost::cli

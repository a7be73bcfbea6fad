#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "phibranch/problem.hpp"

namespace phibranch {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitDiagnostic = 1, kExitUsage = 2 };

/// Runs the phibranch command line (subcommands verify, degree, shoot,
/// continue, examples) writing reports to out and errors to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "R", "lo,hi" or "lo,hi;lo,hi;..." with inf/-inf allowed.
Domain parse_domain_text(const std::string& text);

}  // namespace phibranch

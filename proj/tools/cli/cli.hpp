#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ehub::cli {

enum ExitCode : int { ok = 0, violations = 1, parse_error = 2, infeasible = 3 };

/// Runs one `ehub` command. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ehub::cli

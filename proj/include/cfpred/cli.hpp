#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfpred {

// Subcommands synth, analyze and coverage. Returns 0 on success, 2 on invalid
// input or usage errors, 1 on internal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace cfpred

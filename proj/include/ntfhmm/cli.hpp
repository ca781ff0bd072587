#pragma once

#include <string>
#include <vector>

namespace ntfhmm {

/// Runs one subcommand; args exclude the program name.
/// Exit codes: 0 success, 1 validation/usage error, 2 numerical divergence.
int run_cli(const std::vector<std::string>& args);

}  // namespace ntfhmm

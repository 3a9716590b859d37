#pragma once

#include <string>
#include <vector>

namespace textsmooth {

// Subcommand dispatch for the textsmooth binary. Returns the process exit
// code: 0 success, 1 usage/config error, 2 runtime/data error.
int run_cli(const std::vector<std::string>& args);

std::string cli_usage();

} // namespace textsmooth

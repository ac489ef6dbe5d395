#pragma once

#include <string>
#include <vector>

namespace tgemb {

// Runs one subcommand (ingest | motifs | split | train | eval | gradcheck).
// `args` excludes the program name. Prints a machine-parsable summary line
// on success. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace tgemb

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scontract::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitBoundViolation = 4,
};

/// Entry point of the `scontract` tool. Data goes to `out`, diagnostics and
/// error JSON to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scontract::cli

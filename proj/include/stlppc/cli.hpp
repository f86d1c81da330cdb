#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stlppc {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitSatisfied = 0,     // success, robustness > 0
  kExitNotSatisfied = 1,  // ran to the end but robustness <= 0
  kExitError = 2,         // faults, infeasibility, invalid input
};

/// Entry point of the `stlppc` tool; `args` excludes the program name.
///   run <scenario> [--seed N] [--out DIR]
///   monitor <trace.csv> --formula <file> [--t0 T]
///   check <scenario>
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stlppc

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "micromotion/error.hpp"

namespace micromotion::cli {

enum ExitCode : int {
  kOk = 0,
  kIo = 1,
  kUsage = 2,
  kNonConvergence = 3,
  kDegenerate = 4,
};

ExitCode exit_code_for(ErrorCode code);

/// Runs one command line (args excludes the program name). The single JSON
/// summary line goes to `out`; logs and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace micromotion::cli

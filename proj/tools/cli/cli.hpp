#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srtg::cli {

enum ExitCode : int {
  kOk = 0,
  kValidationError = 1,  // bad flags, unknown config key, malformed value
  kRuntimeError = 2,     // I/O failure, corrupt checkpoint, divergence
};

/// Commands: gen-data, train, evaluate, count-ops, gate-analyze, grad-check.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srtg::cli

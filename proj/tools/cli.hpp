#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rotpba/errors.hpp"

namespace rotpba::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitSolver = 4,
};

int exit_code_for(ErrorKind kind);

/// Runs one `rotpba` command line (args[0] is the program name). Human-readable progress goes
/// to `out`; failures print one JSON line `{"error": {...}}` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's contents.
std::string file_sha256(const std::string& path);

}  // namespace rotpba::cli

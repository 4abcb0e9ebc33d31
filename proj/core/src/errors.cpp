#include "rotpba/errors.hpp"

namespace rotpba {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIngest: return "ingest";
    case ErrorKind::kQuery: return "query";
    case ErrorKind::kDegenerateBearing: return "degenerate_bearing";
    case ErrorKind::kPoleSingularity: return "pole_singularity";
    case ErrorKind::kInvalidSample: return "invalid_sample";
    case ErrorKind::kState: return "state";
    case ErrorKind::kAliasing: return "aliasing";
    case ErrorKind::kSolver: return "solver";
    case ErrorKind::kDensify: return "densify";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace rotpba

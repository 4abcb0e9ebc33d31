#pragma once

#include <stdexcept>
#include <string>

namespace rotpba {

/// Broad failure classes. Each maps onto one stable process exit code in the CLI.
enum class ErrorKind {
  kConfig,            // bad configuration value or missing option
  kParse,             // malformed input file
  kIngest,            // input data violates an ordering/range precondition
  kQuery,             // trajectory query outside its span
  kDegenerateBearing, // zero-length bearing handed to the projection
  kPoleSingularity,   // projection Jacobian requested too close to a pole
  kInvalidSample,     // map read on a pixel outside the valid mask
  kState,             // state vector with the wrong dimension
  kAliasing,          // simulator time step too coarse for the threshold
  kSolver,            // factorization failure or non-finite loss
  kDensify,           // Poisson solve did not converge
  kIo,                // filesystem failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rotpba

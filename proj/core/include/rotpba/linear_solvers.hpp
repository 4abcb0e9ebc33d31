#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>

#include "rotpba/normal_equations.hpp"

namespace rotpba {

enum class LinearSolverKind { kCholesky, kCg };

LinearSolverKind parse_linear_solver(const std::string& name);
std::string to_string(LinearSolverKind kind);

struct LinearSolveOptions {
  LinearSolverKind kind = LinearSolverKind::kCholesky;
  double cg_tolerance = 1e-6;  // relative residual
  long cg_max_iterations = 0;  // 0 selects 10 * dim
};

struct LinearSolveResult {
  Eigen::VectorXd delta;
  int iterations = 0;             // CG only
  double relative_residual = 0.0; // CG only
  bool cg_capped = false;         // CG stopped at its iteration cap; delta is the best iterate
};

/// Entries of diag(A) are clamped to [kMinDiagonal, kMaxDiagonal] before damping so that
/// columns without any observation stay well-posed.
inline constexpr double kMinDiagonal = 1e-6;
inline constexpr double kMaxDiagonal = 1e32;

/// lambda * clamp(diag(A)).
Eigen::VectorXd damping_vector(const NormalEquations& ne, double lambda);

/// Solves (A + lambda diag(A)) dP = b. The Cholesky path factors the full damped system
/// under an approximate-minimum-degree ordering; the CG path is Jacobi preconditioned.
/// Throws Error(kSolver) if the factorization fails.
LinearSolveResult solve_normal_equations(const NormalEquations& ne, double lambda,
                                         const LinearSolveOptions& options);

/// Stateful form for repeated solves: the Cholesky symbolic analysis is reused while the
/// sparsity pattern of the damped system does not change.
class LinearSolver {
 public:
  explicit LinearSolver(LinearSolveOptions options);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  LinearSolveResult solve(const NormalEquations& ne, double lambda);
  std::size_t symbolic_analyses() const { return analyses_; }

 private:
  struct Cholesky;
  LinearSolveOptions options_;
  std::unique_ptr<Cholesky> chol_;
  std::size_t analyses_ = 0;
};

}  // namespace rotpba

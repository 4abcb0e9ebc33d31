#include "rotpba/linear_solvers.hpp"

#include <algorithm>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "rotpba/cg.hpp"
#include "rotpba/errors.hpp"

namespace rotpba {

LinearSolverKind parse_linear_solver(const std::string& name) {
  if (name == "cholesky") return LinearSolverKind::kCholesky;
  if (name == "cg") return LinearSolverKind::kCg;
  throw Error(ErrorKind::kConfig, "unknown linear solver '" + name + "' (expected cholesky|cg)");
}

std::string to_string(LinearSolverKind kind) {
  return kind == LinearSolverKind::kCholesky ? "cholesky" : "cg";
}

Eigen::VectorXd damping_vector(const NormalEquations& ne, double lambda) {
  return lambda * ne.diagonal().cwiseMax(kMinDiagonal).cwiseMin(kMaxDiagonal);
}

struct LinearSolver::Cholesky {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  std::vector<int> outer;
  std::vector<int> inner;
  bool analyzed = false;

  bool same_pattern(const SparseMatrix& a) const {
    if (!analyzed || static_cast<std::size_t>(a.outerSize() + 1) != outer.size() ||
        static_cast<std::size_t>(a.nonZeros()) != inner.size()) {
      return false;
    }
    return std::equal(outer.begin(), outer.end(), a.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), a.innerIndexPtr());
  }
};

LinearSolver::LinearSolver(LinearSolveOptions options) : options_(options) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

LinearSolveResult LinearSolver::solve(const NormalEquations& ne, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::kConfig, "damping lambda must be non-negative");
  const Eigen::VectorXd damping = damping_vector(ne, lambda);
  const Eigen::VectorXd b = ne.b();
  LinearSolveResult out;

  if (b.size() == 0) {
    out.delta.resize(0);
    return out;
  }

  if (options_.kind == LinearSolverKind::kCholesky) {
    SparseMatrix diag(b.size(), b.size());
    diag.reserve(Eigen::VectorXi::Ones(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) diag.insert(i, i) = damping[i];
    SparseMatrix a = ne.assemble(/*lower_only=*/true) + diag;
    a.makeCompressed();
    if (!chol_) chol_ = std::make_unique<Cholesky>();
    if (!chol_->same_pattern(a)) {
      chol_->llt.analyzePattern(a);
      chol_->outer.assign(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
      chol_->inner.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
      chol_->analyzed = true;
      ++analyses_;
    }
    chol_->llt.factorize(a);
    if (chol_->llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kSolver,
                  "cholesky: damped system is not positive definite (lambda = " +
                      std::to_string(lambda) + "); increase lambda");
    }
    out.delta = chol_->llt.solve(b);
    if (chol_->llt.info() != Eigen::Success) throw Error(ErrorKind::kSolver, "cholesky: back-substitution failed");
    return out;
  }

  const Eigen::VectorXd inv_diag = (ne.diagonal() + damping).cwiseMax(kMinDiagonal).cwiseInverse();
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& y) { ne.multiply(v, damping, y); };
  auto precondition = [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) { z = r.cwiseProduct(inv_diag); };
  const long cap = options_.cg_max_iterations > 0 ? options_.cg_max_iterations : 10L * b.size();
  out.delta = Eigen::VectorXd::Zero(b.size());
  const CgReport report = conjugate_gradient(apply, precondition, b, out.delta, options_.cg_tolerance,
                                             static_cast<int>(std::min<long>(cap, 1L << 30)));
  out.iterations = report.iterations;
  out.relative_residual = report.relative_residual;
  out.cg_capped = !report.converged;
  return out;
}

LinearSolveResult solve_normal_equations(const NormalEquations& ne, double lambda,
                                         const LinearSolveOptions& options) {
  return LinearSolver(options).solve(ne, lambda);
}

}  // namespace rotpba

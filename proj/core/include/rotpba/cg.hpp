#pragma once

#include <cmath>

#include <Eigen/Core>

namespace rotpba {

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for a symmetric positive (semi-)definite operator.
///
/// `apply(v, out)` writes A v into `out`; `precondition(r, out)` writes M^-1 r. `x` holds the
/// initial guess on entry and the iterate with the smallest residual seen on exit. For a
/// consistent singular system started inside the range of A the iterates stay in that range.
template <class Apply, class Precondition>
CgReport conjugate_gradient(Apply&& apply, Precondition&& precondition, const Eigen::VectorXd& b,
                            Eigen::VectorXd& x, double tolerance, int max_iterations) {
  CgReport report;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero();
    report.converged = true;
    return report;
  }

  Eigen::VectorXd ax(b.size());
  apply(x, ax);
  Eigen::VectorXd r = b - ax;
  Eigen::VectorXd z(b.size());
  precondition(r, z);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(b.size());
  double rz = r.dot(z);

  Eigen::VectorXd best = x;
  double best_residual = r.norm() / b_norm;
  if (best_residual <= tolerance) {
    report.relative_residual = best_residual;
    report.converged = true;
    return report;
  }

  for (int it = 1; it <= max_iterations; ++it) {
    apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;  // breakdown: direction in the null space or loss of definiteness
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    report.iterations = it;

    const double res = r.norm() / b_norm;
    if (res < best_residual) {
      best_residual = res;
      best = x;
    }
    if (res <= tolerance) break;

    precondition(r, z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }

  x = best;
  report.relative_residual = best_residual;
  report.converged = best_residual <= tolerance;
  return report;
}

}  // namespace rotpba

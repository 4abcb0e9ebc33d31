#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rotpba/residuals.hpp"

namespace rotpba {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class GaugePolicy { kFixFirstPose, kFree };

/// Column layout of the perturbation vector [dP_alpha; dP_beta]: three columns per free
/// control pose, then one per valid map pixel.
struct StateLayout {
  std::size_t num_poses = 0;
  std::size_t map_size = 0;
  GaugePolicy gauge = GaugePolicy::kFixFirstPose;
  bool map_only = false;

  std::size_t free_poses() const;
  std::size_t pose_dim() const { return 3 * free_poses(); }
  std::size_t dim() const { return pose_dim() + map_size; }
  /// First column of control pose i, or -1 if the pose is held fixed.
  std::int64_t pose_column(std::size_t pose) const;
};

StateLayout make_layout(const OptState& state, GaugePolicy gauge, bool map_only);

/// Partitioned normal equations
///   [A11 A12; A12^T A22] [dP_alpha; dP_beta] = [b1; b2].
struct NormalEquations {
  StateLayout layout;
  Eigen::MatrixXd a11;  // dense, pose_dim x pose_dim
  SparseMatrix a12;     // pose_dim x map_size
  SparseMatrix a22;     // map_size x map_size, both triangles stored
  Eigen::VectorXd b1;
  Eigen::VectorXd b2;

  std::size_t used_residuals = 0;
  std::size_t skipped_residuals = 0;
  double phe = 0.0;
  double robust_loss = 0.0;

  Eigen::VectorXd b() const;
  Eigen::VectorXd diagonal() const;
  /// A as one sparse matrix; lower triangle only if `lower_only`.
  SparseMatrix assemble(bool lower_only = false) const;
  Eigen::MatrixXd dense() const;
  /// out = (A + lambda * D) x with D the damping diagonal.
  void multiply(const Eigen::VectorXd& x, const Eigen::VectorXd& damping, Eigen::VectorXd& out) const;
};

/// Accumulates A = sum w_k r_k r_k^T and b = -sum w_k r_k e_k from linearized rows without
/// forming the Jacobian. A22 and A12 entries are collected as triplets and assembled once.
NormalEquations accumulate_normal_equations(std::span<const LinearizedResidual> residuals,
                                            const StateLayout& layout);

struct BuildOptions {
  double contrast = 0.2;
  RobustLoss loss;
  int threads = 1;  // partial systems per worker, merged in a fixed order
};

/// Linearizes every pair at `state` (IRLS weights from the current errors) and accumulates the
/// normal equations in one streaming pass.
NormalEquations build_normal_equations(const OptState& state, const Problem& problem,
                                       const StateLayout& layout, const BuildOptions& options);

}  // namespace rotpba

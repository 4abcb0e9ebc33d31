#pragma once

#include <string>
#include <vector>

#include "rotpba/linear_solvers.hpp"
#include "rotpba/normal_equations.hpp"
#include "rotpba/residuals.hpp"
#include "rotpba/robust_loss.hpp"

namespace rotpba {

struct SolverConfig {
  RobustLoss loss;
  double contrast = 0.2;
  double lambda0 = 1e-3;
  double lambda_factor = 10.0;
  double max_lambda = 1e12;
  int max_iterations = 50;
  double relative_decrease_tol = 1e-6;
  double step_tol = 1e-10;
  LinearSolveOptions linear;
  GaugePolicy gauge = GaugePolicy::kFixFirstPose;
  bool map_only = false;
  int threads = 1;

  void validate() const;
};

/// One row of the iteration log; one row per trial step plus the initial state (iter 0).
struct IterationRecord {
  int iter = 0;
  double lambda = 0.0;
  double phe = 0.0;
  double robust_loss = 0.0;
  double step_norm_pose = 0.0;  // infinity norms of the trial step
  double step_norm_map = 0.0;
  bool accepted = false;
  std::size_t skipped_pairs = 0;
};

enum class Termination {
  kRelativeDecrease,  // accepted step improved the loss by less than the tolerance
  kSmallStep,
  kMaxIterations,
  kLambdaLimit,       // no decrease found before lambda exceeded its limit
  kNoResiduals,
};

std::string to_string(Termination t);

struct LmReport {
  std::vector<IterationRecord> log;
  Termination termination = Termination::kMaxIterations;
  LossSummary initial;
  LossSummary final;
  int iterations = 0;
  int accepted_steps = 0;
  double final_lambda = 0.0;
  std::size_t cg_capped_solves = 0;
};

/// State over the valid mask of `trajectory`, with map values taken from `initial_map` (zero if
/// null).
OptState make_initial_state(const Problem& problem, RotationTrajectory trajectory,
                            const PanoramaGeometry& geom, const DenseMap* initial_map = nullptr);

/// Levenberg-Marquardt on the joint state: linearize, solve (A + lambda diag A) dP = b,
/// accept if the robust loss drops (lambda /= 10) or reject and retry (lambda *= 10).
/// Throws Error(kSolver) on a non-finite loss.
LmReport lm_run(OptState& state, const Problem& problem, const SolverConfig& config);

/// Map-only refinement with the trajectory frozen; the valid mask is rebuilt from it first.
LmReport map_only_run(OptState& state, const Problem& problem, const SolverConfig& config);

/// Writes the iteration log as CSV with header
/// iter,lambda,phe,robust_loss,step_norm_pose,step_norm_map,accepted,skipped_pairs.
void write_iteration_log(const std::vector<IterationRecord>& log, const std::string& path);

}  // namespace rotpba

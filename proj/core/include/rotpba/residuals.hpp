#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rotpba/camera.hpp"
#include "rotpba/events.hpp"
#include "rotpba/pano_map.hpp"
#include "rotpba/robust_loss.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

/// The optimization unknowns: control poses (alpha) and valid map pixels (beta).
struct OptState {
  RotationTrajectory trajectory;
  PanoramaMap map;
};

/// Fixed inputs of one bundle-adjustment problem.
struct Problem {
  CameraModel camera;
  std::vector<ResidualPair> pairs;
};

enum class SkipReason : std::uint8_t { kNone, kInvalidPixel, kPole };

/// Per-segment quantities shared by every residual of one linearization pass.
class TrajectoryCache {
 public:
  explicit TrajectoryCache(const RotationTrajectory& traj);

  const RotationTrajectory& trajectory() const { return *traj_; }
  /// R(t) with its segment index and interpolation weight, without re-deriving log(R_{i+1} R_i^T).
  InterpolatedPose interpolate(double t) const;
  /// A(u, dphi_i) for segment i.
  Mat3 interp_jacobian(std::size_t segment, double u) const;

 private:
  const RotationTrajectory* traj_;
  std::vector<Vec3> delta_;
  std::vector<Mat3> jinv_;
};

/// One linearized error term
///   e ~ e_op - q(t_k)^T dphi + q(t_k - dt_k)^T dphi~ + dM(p(t_k)) - dM(p(t_k - dt_k)).
/// Pose rows are merged per control pose (at most four distinct poses).
struct LinearizedResidual {
  double error = 0.0;
  double weight = 1.0;
  int pose_count = 0;
  std::array<std::int32_t, 4> pose{};  // control-pose indices
  std::array<Row3, 4> pose_row{};      // de/d(dphi_pose)
  std::int32_t map_plus = -1;          // state index of the t_k endpoint, coefficient +1
  std::int32_t map_minus = -1;         // state index of the earlier endpoint, coefficient -1
};

/// e_k = M(p(t_k)) - M(p(t_k - dt_k)) - p_k C with nearest-neighbor sampling. Returns the
/// reason if an endpoint is off the valid mask or at a pole.
SkipReason try_residual(const OptState& state, const CameraModel& cam, const ResidualPair& pair,
                        double contrast, double& error);

SkipReason try_residual(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                        const ResidualPair& pair, double contrast, double& error);

/// Throwing form of try_residual.
double residual(const OptState& state, const CameraModel& cam, const ResidualPair& pair,
                double contrast);

/// State indices of the t_k endpoint (plus) and the earlier endpoint (minus).
SkipReason endpoint_states(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                           const ResidualPair& pair, std::int32_t& plus, std::int32_t& minus);

/// Fills error, pose rows and map indices (weight is left at 1).
SkipReason linearize(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                     const ResidualPair& pair, double contrast, LinearizedResidual& out);

struct LossSummary {
  double phe = 0.0;          // sum of e_k^2
  double robust_loss = 0.0;  // sum of rho(e_k)
  std::size_t used = 0;
  std::size_t skipped = 0;
};

LossSummary evaluate_loss(const OptState& state, const Problem& problem, double contrast,
                          const RobustLoss& loss);

/// All residuals of the problem (skipped pairs omitted).
std::vector<double> residual_values(const OptState& state, const Problem& problem, double contrast);

}  // namespace rotpba

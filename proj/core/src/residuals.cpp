#include "rotpba/residuals.hpp"

#include "rotpba/errors.hpp"

namespace rotpba {

TrajectoryCache::TrajectoryCache(const RotationTrajectory& traj) : traj_(&traj) {
  const std::size_t segments = traj.size() - 1;
  delta_.resize(segments);
  jinv_.resize(segments);
  for (std::size_t i = 0; i < segments; ++i) {
    delta_[i] = traj.segment_delta(i);
    jinv_[i] = left_jacobian_inverse(delta_[i]);
  }
}

InterpolatedPose TrajectoryCache::interpolate(double t) const {
  const auto [i, u] = traj_->locate(t);
  InterpolatedPose out;
  out.segment = i;
  out.u = u;
  out.rotation = u == 0.0 ? traj_->pose(i) : Rotation(exp_so3(u * delta_[i]) * traj_->pose(i));
  return out;
}

Mat3 TrajectoryCache::interp_jacobian(std::size_t segment, double u) const {
  if (u == 0.0) return Mat3::Zero();
  if (u == 1.0) return Mat3::Identity();
  return u * left_jacobian(u * delta_[segment]) * jinv_[segment];
}

namespace {

struct Endpoint {
  InterpolatedPose pose;
  Vec3 z;
  PixelIndex pixel;
};

SkipReason locate_endpoint(const OptState& state, const TrajectoryCache& cache, const Vec3& bearing,
                           double t, Endpoint& out) {
  out.pose = cache.interpolate(t);
  out.z = out.pose.rotation * bearing;
  if (near_pole(out.z)) return SkipReason::kPole;
  const PanoramaGeometry& geom = state.map.geometry();
  out.pixel = nearest_pixel(geom, project_equirect(geom, out.z));
  if (!state.map.valid(out.pixel)) return SkipReason::kInvalidPixel;
  return SkipReason::kNone;
}

void add_pose_row(LinearizedResidual& r, std::int32_t pose, const Row3& row) {
  for (int j = 0; j < r.pose_count; ++j) {
    if (r.pose[j] == pose) {
      r.pose_row[j] += row;
      return;
    }
  }
  r.pose[r.pose_count] = pose;
  r.pose_row[r.pose_count] = row;
  ++r.pose_count;
}

// Adds the pose rows of one endpoint; `coefficient` is -1 for the t_k endpoint and +1 for the
// earlier one.
void add_endpoint_rows(const OptState& state, const TrajectoryCache& cache, const Endpoint& ep,
                       double coefficient, LinearizedResidual& out) {
  const Vec2 grad = state.map.gradient_at(ep.pixel);
  if (grad.x() == 0.0 && grad.y() == 0.0) return;
  const Mat23 e_op = equirect_jacobian(state.map.geometry(), ep.z) * hat(ep.z);
  const Row3 q = grad.transpose() * e_op;
  const std::size_t i = ep.pose.segment;
  const double u = ep.pose.u;
  const Mat3 a = cache.interp_jacobian(i, u);
  if (u < 1.0) add_pose_row(out, static_cast<std::int32_t>(i), coefficient * (q - q * a));
  if (u > 0.0) add_pose_row(out, static_cast<std::int32_t>(i + 1), coefficient * (q * a));
}

}  // namespace

SkipReason try_residual(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                        const ResidualPair& pair, double contrast, double& error) {
  const Vec3 bearing = back_project(cam, pair.x, pair.y);
  Endpoint now, before;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t, now); s != SkipReason::kNone) return s;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t_prev, before); s != SkipReason::kNone) return s;
  error = state.map.value(now.pixel) - state.map.value(before.pixel) - pair.pol * contrast;
  return SkipReason::kNone;
}

SkipReason try_residual(const OptState& state, const CameraModel& cam, const ResidualPair& pair,
                        double contrast, double& error) {
  return try_residual(state, TrajectoryCache(state.trajectory), cam, pair, contrast, error);
}

double residual(const OptState& state, const CameraModel& cam, const ResidualPair& pair,
                double contrast) {
  double e = 0.0;
  switch (try_residual(state, cam, pair, contrast, e)) {
    case SkipReason::kNone: return e;
    case SkipReason::kPole: throw Error(ErrorKind::kPoleSingularity, "residual: endpoint at a pole");
    case SkipReason::kInvalidPixel: break;
  }
  throw Error(ErrorKind::kInvalidSample, "residual: endpoint off the valid mask");
}

SkipReason endpoint_states(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                           const ResidualPair& pair, std::int32_t& plus, std::int32_t& minus) {
  const Vec3 bearing = back_project(cam, pair.x, pair.y);
  Endpoint now, before;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t, now); s != SkipReason::kNone) return s;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t_prev, before); s != SkipReason::kNone) return s;
  plus = state.map.state_index(now.pixel);
  minus = state.map.state_index(before.pixel);
  return SkipReason::kNone;
}

SkipReason linearize(const OptState& state, const TrajectoryCache& cache, const CameraModel& cam,
                     const ResidualPair& pair, double contrast, LinearizedResidual& out) {
  const Vec3 bearing = back_project(cam, pair.x, pair.y);
  Endpoint now, before;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t, now); s != SkipReason::kNone) return s;
  if (auto s = locate_endpoint(state, cache, bearing, pair.t_prev, before); s != SkipReason::kNone) return s;

  out = LinearizedResidual{};
  out.error = state.map.value(now.pixel) - state.map.value(before.pixel) - pair.pol * contrast;
  out.map_plus = state.map.state_index(now.pixel);
  out.map_minus = state.map.state_index(before.pixel);
  add_endpoint_rows(state, cache, now, -1.0, out);
  add_endpoint_rows(state, cache, before, +1.0, out);
  return SkipReason::kNone;
}

LossSummary evaluate_loss(const OptState& state, const Problem& problem, double contrast,
                          const RobustLoss& loss) {
  LossSummary out;
  const TrajectoryCache cache(state.trajectory);
  for (const ResidualPair& pair : problem.pairs) {
    double e = 0.0;
    if (try_residual(state, cache, problem.camera, pair, contrast, e) != SkipReason::kNone) {
      ++out.skipped;
      continue;
    }
    out.phe += e * e;
    out.robust_loss += loss.rho(e);
    ++out.used;
  }
  return out;
}

std::vector<double> residual_values(const OptState& state, const Problem& problem, double contrast) {
  const TrajectoryCache cache(state.trajectory);
  std::vector<double> out;
  out.reserve(problem.pairs.size());
  for (const ResidualPair& pair : problem.pairs) {
    double e = 0.0;
    if (try_residual(state, cache, problem.camera, pair, contrast, e) == SkipReason::kNone) out.push_back(e);
  }
  return out;
}

}  // namespace rotpba

#include "rotpba/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {

Rotation geodesic(const Rotation& a, const Rotation& b, double u) {
  if (u == 0.0) return a;
  return exp_so3(u * log_so3(b * a.transpose())) * a;
}

[[noreturn]] void throw_out_of_span(double t, double begin, double end) {
  std::ostringstream os;
  os.precision(12);
  os << "query time " << t << " outside trajectory span [" << begin << ", " << end << "]";
  throw Error(ErrorKind::kQuery, os.str());
}

}  // namespace

StampedTrajectory::StampedTrajectory(std::vector<double> times, std::vector<Rotation> rotations)
    : times_(std::move(times)), rotations_(std::move(rotations)) {
  if (times_.size() != rotations_.size()) {
    throw Error(ErrorKind::kState, "trajectory: times/rotations length mismatch");
  }
  if (times_.size() < 2) {
    throw Error(ErrorKind::kIngest, "trajectory: at least two poses are required");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw Error(ErrorKind::kIngest,
                  "trajectory: timestamps not strictly increasing at index " + std::to_string(i));
    }
  }
}

bool StampedTrajectory::contains(double t) const {
  return !times_.empty() && t >= times_.front() - kTimeTolerance &&
         t <= times_.back() + kTimeTolerance;
}

Rotation StampedTrajectory::interpolate(double t) const {
  if (!contains(t)) throw_out_of_span(t, begin_time(), end_time());
  t = std::clamp(t, times_.front(), times_.back());
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = it == times_.end() ? times_.size() - 2
                                     : static_cast<std::size_t>(it - times_.begin()) - 1;
  i = std::min(i, times_.size() - 2);
  const double u = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return geodesic(rotations_[i], rotations_[i + 1], u);
}

RotationTrajectory::RotationTrajectory(double t_begin, double frequency, std::vector<Rotation> poses)
    : t_begin_(t_begin), frequency_(frequency), poses_(std::move(poses)) {
  if (!(frequency_ > 0.0) || !std::isfinite(frequency_)) {
    throw Error(ErrorKind::kConfig, "trajectory: control-pose frequency must be positive");
  }
  if (poses_.size() < 2) {
    throw Error(ErrorKind::kIngest, "trajectory: at least two control poses are required");
  }
}

RotationTrajectory RotationTrajectory::from_stamped(const StampedTrajectory& stamped) {
  const std::size_t n = stamped.size();
  const double dt = (stamped.end_time() - stamped.begin_time()) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = stamped.begin_time() + static_cast<double>(i) * dt;
    if (std::abs(stamped.time(i) - expected) > kTimeTolerance) {
      throw Error(ErrorKind::kIngest,
                  "trajectory: control poses are not uniformly spaced (index " +
                      std::to_string(i) + ")");
    }
  }
  return RotationTrajectory(stamped.begin_time(), 1.0 / dt, stamped.rotations());
}

void RotationTrajectory::apply_left_update(std::size_t i, const Vec3& dphi) {
  poses_[i] = orthonormalize(exp_so3(dphi) * poses_[i]);
}

bool RotationTrajectory::contains(double t) const {
  return t >= begin_time() - kTimeTolerance && t <= end_time() + kTimeTolerance;
}

std::pair<std::size_t, double> RotationTrajectory::locate(double t) const {
  if (!contains(t)) throw_out_of_span(t, begin_time(), end_time());
  const std::size_t last_segment = poses_.size() - 2;
  const double s = (t - t_begin_) * frequency_;
  std::size_t i = s <= 0.0 ? 0 : std::min(static_cast<std::size_t>(s), last_segment);
  // Floating-point floor can land one segment off right at a knot.
  if (i < last_segment && t >= time(i + 1)) ++i;
  if (i > 0 && t < time(i)) --i;
  return {i, std::clamp((t - time(i)) * frequency_, 0.0, 1.0)};
}

InterpolatedPose RotationTrajectory::interpolate(double t) const {
  const auto [i, u] = locate(t);
  return {geodesic(poses_[i], poses_[i + 1], u), i, u};
}

Vec3 RotationTrajectory::segment_delta(std::size_t i) const {
  return log_so3(poses_[i + 1] * poses_[i].transpose());
}

StampedTrajectory RotationTrajectory::to_stamped() const {
  std::vector<double> times(poses_.size());
  for (std::size_t i = 0; i < poses_.size(); ++i) times[i] = time(i);
  return StampedTrajectory(std::move(times), poses_);
}

RotationTrajectory resample_uniform(const StampedTrajectory& source, double t_begin, double t_end,
                                    double frequency) {
  if (!(t_end > t_begin)) throw Error(ErrorKind::kConfig, "resample: empty time window");
  if (!(frequency > 0.0)) throw Error(ErrorKind::kConfig, "resample: frequency must be positive");
  if (source.empty() || !source.contains(t_begin) || !source.contains(t_end)) {
    throw Error(ErrorKind::kQuery, "resample: window not covered by the source trajectory");
  }
  const auto segments = static_cast<std::size_t>(std::floor((t_end - t_begin) * frequency + 1e-6));
  if (segments < 1) {
    throw Error(ErrorKind::kConfig, "resample: window shorter than one control-pose period");
  }
  std::vector<Rotation> poses(segments + 1);
  for (std::size_t i = 0; i <= segments; ++i) {
    // The last knot may overshoot t_end by the rounding slack; read it at the source boundary.
    const double t = t_begin + static_cast<double>(i) / frequency;
    poses[i] = source.interpolate(std::clamp(t, source.begin_time(), source.end_time()));
  }
  return RotationTrajectory(t_begin, frequency, std::move(poses));
}

}  // namespace rotpba

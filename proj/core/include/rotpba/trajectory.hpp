#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rotpba/so3.hpp"

namespace rotpba {

/// Tolerance used both for knot uniformity and for span membership of query times.
inline constexpr double kTimeTolerance = 1e-9;

struct InterpolatedPose {
  Rotation rotation;
  std::size_t segment = 0;  // R(t) lies between control poses `segment` and `segment + 1`
  double u = 0.0;           // (t - t_i) / (t_{i+1} - t_i), in [0, 1]
};

/// Rotations at arbitrary strictly increasing timestamps (ground truth, front-end output).
/// Queries use the same geodesic linear interpolation as RotationTrajectory.
class StampedTrajectory {
 public:
  StampedTrajectory() = default;
  StampedTrajectory(std::vector<double> times, std::vector<Rotation> rotations);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double begin_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }
  double time(std::size_t i) const { return times_[i]; }
  const Rotation& rotation(std::size_t i) const { return rotations_[i]; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Rotation>& rotations() const { return rotations_; }

  bool contains(double t) const;
  Rotation interpolate(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Rotation> rotations_;
};

/// Continuous-time orientation R(t) = exp(u log(R_{i+1} R_i^T)) R_i over uniformly spaced
/// control poses t_i = t_begin + i / f.
class RotationTrajectory {
 public:
  RotationTrajectory() = default;
  RotationTrajectory(double t_begin, double frequency, std::vector<Rotation> poses);

  /// Requires the stamps to be uniformly spaced within kTimeTolerance.
  static RotationTrajectory from_stamped(const StampedTrajectory& stamped);

  std::size_t size() const { return poses_.size(); }
  double frequency() const { return frequency_; }
  double period() const { return 1.0 / frequency_; }
  double begin_time() const { return t_begin_; }
  double end_time() const { return time(poses_.size() - 1); }
  double time(std::size_t i) const { return t_begin_ + static_cast<double>(i) / frequency_; }

  const Rotation& pose(std::size_t i) const { return poses_[i]; }
  const std::vector<Rotation>& poses() const { return poses_; }
  void set_pose(std::size_t i, const Rotation& r) { poses_[i] = r; }

  /// R_i <- exp(dphi^) R_i followed by re-orthonormalization.
  void apply_left_update(std::size_t i, const Vec3& dphi);

  bool contains(double t) const;

  /// Throws Error(kQuery) outside [begin_time, end_time].
  InterpolatedPose interpolate(double t) const;

  /// Segment index and interpolation weight u of time t (same span check as interpolate).
  std::pair<std::size_t, double> locate(double t) const;

  /// Incremental angle log(R_{i+1} R_i^T) of segment i.
  Vec3 segment_delta(std::size_t i) const;

  StampedTrajectory to_stamped() const;

 private:
  double t_begin_ = 0.0;
  double frequency_ = 1.0;
  std::vector<Rotation> poses_;
};

/// Control poses at frequency f covering [t_begin, t_end] sampled from `source`. The last knot
/// is the largest t_begin + k/f not exceeding t_end.
RotationTrajectory resample_uniform(const StampedTrajectory& source, double t_begin, double t_end,
                                    double frequency);

}  // namespace rotpba

#pragma once

#include "rotpba/camera.hpp"
#include "rotpba/events.hpp"
#include "rotpba/scene.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

/// Contrast thresholds of the event generation model, in log-intensity units.
struct EGMParams {
  double c_pos = 0.2;
  double c_neg = 0.2;

  static EGMParams symmetric(double c) { return {c, c}; }
  void validate() const;
};

struct SimulationStats {
  std::size_t samples_per_pixel = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

/// Ideal pure-rotation event simulator. Every pixel samples L(x, t) = M(W(x; R(t))) on a grid
/// of step `dt_sample` across the trajectory span and emits an event each time L moves by the
/// threshold from its reference level; the reference then advances by exactly one threshold.
/// Crossing times are refined by linear interpolation between samples. Throws
/// Error(kAliasing) if one step changes L by C/4 or more.
EventStream simulate_events(const LogIntensityField& scene, const CameraModel& cam,
                            const RotationTrajectory& gt_traj, const EGMParams& params,
                            double dt_sample, SimulationStats* stats = nullptr);

/// Same, reading the scene from a dense panorama by bilinear interpolation.
EventStream simulate_events(const DenseMap& gt_map, const CameraModel& cam,
                            const RotationTrajectory& gt_traj, const EGMParams& params,
                            double dt_sample, SimulationStats* stats = nullptr);

/// Smooth test motion R(t) = exp(phi(t)^) with phi_i(t) = a_i sin(2 pi f_i t + c_i) (a in degrees).
struct SinusoidalMotion {
  Vec3 amplitude_deg{30.0, 10.0, 5.0};
  Vec3 frequency_hz{0.5, 0.7, 0.9};
  Vec3 phase{0.0, 1.0, 2.0};

  Rotation at(double t) const;
  /// Control poses at `pose_frequency` from t_begin over `duration` (rounded to whole periods).
  RotationTrajectory sample(double t_begin, double duration, double pose_frequency) const;
};

/// R_i <- exp(d_i^) R_i with d_i ~ N(0, s^2 I), s = rms_deg / sqrt(3), so the RMS angle is rms_deg.
RotationTrajectory perturb_poses(const RotationTrajectory& traj, double rms_deg, std::uint64_t seed);

/// Flips the polarity of each event independently with probability `fraction`; returns the count.
std::size_t flip_polarities(EventStream& events, double fraction, std::uint64_t seed);

}  // namespace rotpba

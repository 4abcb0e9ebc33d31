#include "rotpba/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {
// Guards the level comparisons against round-off when a scene plateau sits exactly on a level.
constexpr double kLevelSlack = 1e-12;
}  // namespace

void EGMParams::validate() const {
  if (!(c_pos > 0.0) || !(c_neg > 0.0)) {
    throw Error(ErrorKind::kConfig, "contrast thresholds must be positive");
  }
}

EventStream simulate_events(const LogIntensityField& scene, const CameraModel& cam,
                            const RotationTrajectory& gt_traj, const EGMParams& params,
                            double dt_sample, SimulationStats* stats) {
  cam.validate();
  params.validate();
  if (!(dt_sample > 0.0)) throw Error(ErrorKind::kConfig, "simulator: dt_sample must be positive");

  const double t0 = gt_traj.begin_time();
  const double t1 = gt_traj.end_time();
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt_sample - 1e-9));
  std::vector<double> times(steps + 1);
  std::vector<Rotation> rotations(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    times[j] = j == steps ? t1 : t0 + static_cast<double>(j) * dt_sample;
    rotations[j] = gt_traj.interpolate(times[j]).rotation;
  }

  const double alias_limit = 0.25 * std::min(params.c_pos, params.c_neg);
  EventStream events;
  std::vector<double> samples(steps + 1);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 bearing = back_project(cam, x, y);
      for (std::size_t j = 0; j <= steps; ++j) samples[j] = scene(rotations[j] * bearing);

      double reference = samples[0];
      for (std::size_t j = 0; j < steps; ++j) {
        const double v0 = samples[j];
        const double v1 = samples[j + 1];
        if (std::abs(v1 - v0) >= alias_limit) {
          std::ostringstream os;
          os << "simulator: log-intensity step " << std::abs(v1 - v0) << " >= C/4 at pixel (" << x
             << ", " << y << "), t = " << times[j] << "; reduce dt_sample";
          throw Error(ErrorKind::kAliasing, os.str());
        }
        // Steps are below C/4, so at most one crossing can happen per step.
        int pol = 0;
        double level = 0.0;
        if (v1 - reference >= params.c_pos - kLevelSlack) {
          pol = 1;
          level = reference + params.c_pos;
        } else if (reference - v1 >= params.c_neg - kLevelSlack) {
          pol = -1;
          level = reference - params.c_neg;
        }
        if (pol == 0) continue;
        double a = v1 != v0 ? (level - v0) / (v1 - v0) : 1.0;
        a = std::clamp(a, 0.0, 1.0);
        events.push_back({times[j] + a * (times[j + 1] - times[j]), x, y, pol});
        reference = level;
      }
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (stats) {
    stats->samples_per_pixel = steps + 1;
    stats->positive = static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [](const Event& e) { return e.pol > 0; }));
    stats->negative = events.size() - stats->positive;
  }
  return events;
}

EventStream simulate_events(const DenseMap& gt_map, const CameraModel& cam,
                            const RotationTrajectory& gt_traj, const EGMParams& params,
                            double dt_sample, SimulationStats* stats) {
  return simulate_events(field_from_map(gt_map), cam, gt_traj, params, dt_sample, stats);
}

Rotation SinusoidalMotion::at(double t) const {
  Vec3 phi;
  for (int i = 0; i < 3; ++i) {
    phi[i] = amplitude_deg[i] * std::numbers::pi / 180.0 *
             std::sin(2.0 * std::numbers::pi * frequency_hz[i] * t + phase[i]);
  }
  return exp_so3(phi);
}

RotationTrajectory SinusoidalMotion::sample(double t_begin, double duration, double pose_frequency) const {
  if (!(pose_frequency > 0.0) || !(duration > 0.0)) {
    throw Error(ErrorKind::kConfig, "motion: duration and pose frequency must be positive");
  }
  const auto segments = std::max<long>(1, std::lround(duration * pose_frequency));
  std::vector<Rotation> poses;
  poses.reserve(segments + 1);
  for (long i = 0; i <= segments; ++i) poses.push_back(at(t_begin + static_cast<double>(i) / pose_frequency));
  return RotationTrajectory(t_begin, pose_frequency, std::move(poses));
}

RotationTrajectory perturb_poses(const RotationTrajectory& traj, double rms_deg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, rms_deg * std::numbers::pi / 180.0 / std::sqrt(3.0));
  RotationTrajectory out = traj;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3 d(noise(rng), noise(rng), noise(rng));
    out.apply_left_update(i, d);
  }
  return out;
}

std::size_t flip_polarities(EventStream& events, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorKind::kConfig, "flip fraction must be in [0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(fraction);
  std::size_t n = 0;
  for (Event& e : events) {
    if (flip(rng)) {
      e.pol = -e.pol;
      ++n;
    }
  }
  return n;
}

}  // namespace rotpba

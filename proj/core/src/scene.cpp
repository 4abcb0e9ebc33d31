#include "rotpba/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

// Smooth square wave in [-1, 1] with `cycles` full periods over `span` and soft edges.
double soft_square(double angle, double period, double edge) {
  const double s = std::sin(2.0 * kPi * angle / period);
  const double slope = period / (kPi * std::max(edge, 1e-9));
  return std::tanh(slope * s);
}

struct Wave {
  Vec3 k;
  double phase;
  double amp;
};

std::vector<Wave> noise_waves(double scale_deg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> band(0.6, 1.6);
  std::vector<Wave> waves(48);
  for (Wave& w : waves) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const double f = band(rng);
    w.k = dir * (2.0 * kPi / deg2rad(scale_deg)) * f;
    w.phase = uni(rng);
    w.amp = 1.0 / f;
  }
  double norm = 0.0;
  for (const Wave& w : waves) norm += w.amp * w.amp;
  norm = std::sqrt(0.5 * norm);
  for (Wave& w : waves) w.amp /= norm;  // unit standard deviation
  return waves;
}

}  // namespace

DenseMap::DenseMap(const PanoramaGeometry& geom, std::vector<double> values)
    : geom_(geom), values_(std::move(values)) {
  if (values_.size() != geom_.pixel_count()) {
    throw Error(ErrorKind::kState, "dense map: value count does not match geometry");
  }
}

double DenseMap::bilinear(const MapPoint& p) const {
  const double x = p.x() - 0.5;
  const double y = std::clamp(p.y() - 0.5, 0.0, static_cast<double>(geom_.height - 1));
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double ax = x - fx0;
  const double ay = y - fy0;
  int c0 = static_cast<int>(fx0) % geom_.width;
  if (c0 < 0) c0 += geom_.width;
  const int c1 = (c0 + 1) % geom_.width;
  const int r0 = static_cast<int>(fy0);
  const int r1 = std::min(r0 + 1, geom_.height - 1);
  const double top = (1.0 - ax) * at(c0, r0) + ax * at(c1, r0);
  const double bottom = (1.0 - ax) * at(c0, r1) + ax * at(c1, r1);
  return (1.0 - ay) * top + ay * bottom;
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "noise" || name == "bandlimited-noise") return SceneKind::kBandlimitedNoise;
  if (name == "checkerboard") return SceneKind::kCheckerboard;
  if (name == "step-grid" || name == "step-edge-grid") return SceneKind::kStepEdgeGrid;
  if (name == "step-edge") return SceneKind::kStepEdge;
  if (name == "constant") return SceneKind::kConstant;
  throw Error(ErrorKind::kConfig, "unknown scene '" + name + "'");
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kBandlimitedNoise: return "noise";
    case SceneKind::kCheckerboard: return "checkerboard";
    case SceneKind::kStepEdgeGrid: return "step-grid";
    case SceneKind::kStepEdge: return "step-edge";
    case SceneKind::kConstant: return "constant";
  }
  return "unknown";
}

double ProceduralScene::evaluate(const Vec3& bearing) const {
  const Vec3 b = bearing.normalized();
  if (kind == SceneKind::kBandlimitedNoise) return field()(b);
  const double azimuth = std::atan2(b.x(), b.z());
  const double polar = std::acos(std::clamp(-b.y(), -1.0, 1.0));
  return evaluate(azimuth, polar);
}

double ProceduralScene::evaluate(double azimuth, double polar) const {
  switch (kind) {
    case SceneKind::kConstant:
      return amplitude;
    case SceneKind::kBandlimitedNoise: {
      const double s = std::sin(polar);
      return evaluate(Vec3(s * std::sin(azimuth), -std::cos(polar), s * std::cos(azimuth)));
    }
    case SceneKind::kCheckerboard: {
      // An even number of checks around the horizon keeps the pattern seamless.
      const double n = 2.0 * std::max(1.0, std::round(180.0 / scale_deg));
      const double period = 2.0 * kPi / n * 2.0;
      const double edge = deg2rad(edge_width_deg);
      return 0.5 * amplitude * soft_square(azimuth, period, edge) *
             soft_square(polar, period, edge);
    }
    case SceneKind::kStepEdgeGrid: {
      const double n = std::max(1.0, std::round(360.0 / scale_deg));
      const double period = 2.0 * kPi / n;
      const double edge = deg2rad(edge_width_deg);
      return 0.25 * amplitude *
             (soft_square(azimuth, period, edge) + soft_square(polar, period, edge));
    }
    case SceneKind::kStepEdge: {
      // Rises from 0 to `amplitude` across azimuth 0 and falls back across the seam.
      const double w = deg2rad(edge_width_deg);
      const double rise = smoothstep((azimuth + 0.5 * w) / w);
      const double fall = smoothstep((std::abs(azimuth) - (kPi - 0.5 * w)) / w);
      return amplitude * rise * (1.0 - fall);
    }
  }
  return 0.0;
}

LogIntensityField ProceduralScene::field() const {
  if (kind == SceneKind::kBandlimitedNoise) {
    // Evaluated on the sphere directly so there is no seam and no pole distortion.
    return [waves = noise_waves(scale_deg, seed), gain = 0.25 * amplitude](const Vec3& bearing) {
      const Vec3 b = bearing.normalized();
      double v = 0.0;
      for (const Wave& w : waves) v += w.amp * std::cos(w.k.dot(b) + w.phase);
      return gain * v;
    };
  }
  return [scene = *this](const Vec3& bearing) { return scene.evaluate(bearing); };
}

DenseMap rasterize(const LogIntensityField& field, const PanoramaGeometry& geom) {
  DenseMap out(geom);
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) {
      out.at(c, r) = field(lift_equirect(geom, pixel_center({c, r})));
    }
  }
  return out;
}

LogIntensityField field_from_map(const DenseMap& map) {
  return [&map](const Vec3& bearing) {
    return map.bilinear(project_equirect(map.geometry(), bearing));
  };
}

}  // namespace rotpba

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rotpba/camera.hpp"

namespace rotpba {

/// Row-major H x W grid of log-intensity values over a panorama geometry.
class DenseMap {
 public:
  DenseMap() = default;
  explicit DenseMap(const PanoramaGeometry& geom, double fill = 0.0)
      : geom_(geom), values_(geom.pixel_count(), fill) {}
  DenseMap(const PanoramaGeometry& geom, std::vector<double> values);

  const PanoramaGeometry& geometry() const { return geom_; }
  int width() const { return geom_.width; }
  int height() const { return geom_.height; }
  std::size_t size() const { return values_.size(); }

  std::size_t flat(int col, int row) const {
    return static_cast<std::size_t>(row) * geom_.width + col;
  }
  double& at(int col, int row) { return values_[flat(col, row)]; }
  double at(int col, int row) const { return values_[flat(col, row)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Bilinear interpolation between pixel centers; wraps in azimuth, clamps at the poles.
  double bilinear(const MapPoint& p) const;

 private:
  PanoramaGeometry geom_;
  std::vector<double> values_;
};

/// Log intensity as a function of a unit bearing in the world frame.
using LogIntensityField = std::function<double(const Vec3& bearing)>;

enum class SceneKind { kBandlimitedNoise, kCheckerboard, kStepEdgeGrid, kStepEdge, kConstant };

SceneKind parse_scene_kind(const std::string& name);
std::string to_string(SceneKind kind);

/// Procedural panoramic textures. All are smooth functions of azimuth and polar angle so the
/// simulator can evaluate them exactly along a continuous trajectory.
struct ProceduralScene {
  SceneKind kind = SceneKind::kBandlimitedNoise;
  double amplitude = 1.0;   // peak-to-peak log-intensity range, approximately
  double scale_deg = 12.0;  // feature size (noise wavelength, checker size, grid spacing)
  double edge_width_deg = 2.0;  // transition width of checkerboard and step edges
  std::uint64_t seed = 1;

  double evaluate(double azimuth, double polar) const;
  double evaluate(const Vec3& bearing) const;
  LogIntensityField field() const;
};

/// Samples a field at every pixel center of the geometry.
DenseMap rasterize(const LogIntensityField& field, const PanoramaGeometry& geom);

/// A field backed by a dense map with bilinear interpolation.
LogIntensityField field_from_map(const DenseMap& map);

}  // namespace rotpba

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rotpba/camera.hpp"
#include "rotpba/events.hpp"
#include "rotpba/scene.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

using ValidMask = std::vector<std::uint8_t>;  // row-major, 1 = valid

/// Semi-dense panoramic log-intensity map. Only valid pixels are optimization unknowns; they
/// are numbered in raster order, giving the state index n in [0, N_p).
class PanoramaMap {
 public:
  static constexpr std::int32_t kInvalid = -1;

  PanoramaMap() = default;
  PanoramaMap(DenseMap values, ValidMask mask);

  const PanoramaGeometry& geometry() const { return values_.geometry(); }
  const DenseMap& values() const { return values_; }
  const ValidMask& mask() const { return mask_; }
  std::size_t state_size() const { return pixel_of_state_.size(); }

  bool valid(int col, int row) const { return mask_[values_.flat(col, row)] != 0; }
  bool valid(const PixelIndex& px) const { return valid(px.col, px.row); }
  std::int32_t state_index(const PixelIndex& px) const {
    return state_of_pixel_[values_.flat(px.col, px.row)];
  }
  std::size_t pixel_of_state(std::size_t n) const { return pixel_of_state_[n]; }

  double value(const PixelIndex& px) const { return values_.at(px.col, px.row); }
  double state_value(std::size_t n) const { return values_[pixel_of_state_[n]]; }

  /// Nearest-neighbor readout. Throws Error(kInvalidSample) on an invalid pixel.
  double sample(const MapPoint& p) const;

  /// Masked central-difference gradient at a pixel (log units per map pixel). A missing
  /// neighbor is replaced by the center value, which halves the one-sided difference; an
  /// isolated pixel has zero gradient. Azimuth wraps; rows clamp at the poles.
  Vec2 gradient_at(const PixelIndex& px) const;

  /// Gradient at the nearest pixel of p. Throws Error(kInvalidSample) on an invalid pixel.
  Vec2 sample_gradient(const MapPoint& p) const;

  /// beta_n += delta_n for every valid pixel. Throws Error(kState) on a length mismatch.
  void apply_update(std::span<const double> delta);

  /// Adds c to every valid pixel.
  void shift(double c);

  void set_state_value(std::size_t n, double v) { values_[pixel_of_state_[n]] = v; }

 private:
  DenseMap values_;
  ValidMask mask_;
  std::vector<std::int32_t> state_of_pixel_;
  std::vector<std::size_t> pixel_of_state_;
};

/// A pixel is valid iff some warped pair endpoint (nearest-neighbor rounding) lands on it
/// under `traj`.
ValidMask build_valid_mask(std::span<const ResidualPair> pairs, const CameraModel& cam,
                           const PanoramaGeometry& geom, const RotationTrajectory& traj);

std::size_t count_valid(const ValidMask& mask);

}  // namespace rotpba

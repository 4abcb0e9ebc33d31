#include "rotpba/pano_map.hpp"

#include <algorithm>
#include <numeric>

#include "rotpba/errors.hpp"

namespace rotpba {

PanoramaMap::PanoramaMap(DenseMap values, ValidMask mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_.size() != values_.size()) {
    throw Error(ErrorKind::kState, "panorama map: mask size does not match the value grid");
  }
  state_of_pixel_.assign(mask_.size(), kInvalid);
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) {
      state_of_pixel_[i] = static_cast<std::int32_t>(pixel_of_state_.size());
      pixel_of_state_.push_back(i);
    }
  }
}

double PanoramaMap::sample(const MapPoint& p) const {
  const PixelIndex px = nearest_pixel(geometry(), p);
  if (!valid(px)) throw Error(ErrorKind::kInvalidSample, "map: nearest pixel is not valid");
  return value(px);
}

Vec2 PanoramaMap::gradient_at(const PixelIndex& px) const {
  const int w = geometry().width;
  const int h = geometry().height;
  const double center = value(px);
  auto read = [&](int col, int row) {
    col = (col % w + w) % w;
    row = std::clamp(row, 0, h - 1);
    return valid(col, row) ? values_.at(col, row) : center;
  };
  return {0.5 * (read(px.col + 1, px.row) - read(px.col - 1, px.row)),
          0.5 * (read(px.col, px.row + 1) - read(px.col, px.row - 1))};
}

Vec2 PanoramaMap::sample_gradient(const MapPoint& p) const {
  const PixelIndex px = nearest_pixel(geometry(), p);
  if (!valid(px)) throw Error(ErrorKind::kInvalidSample, "map: nearest pixel is not valid");
  return gradient_at(px);
}

void PanoramaMap::apply_update(std::span<const double> delta) {
  if (delta.size() != pixel_of_state_.size()) {
    throw Error(ErrorKind::kState, "map update: expected " + std::to_string(pixel_of_state_.size()) +
                                       " entries, got " + std::to_string(delta.size()));
  }
  for (std::size_t n = 0; n < delta.size(); ++n) values_[pixel_of_state_[n]] += delta[n];
}

void PanoramaMap::shift(double c) {
  for (std::size_t i : pixel_of_state_) values_[i] += c;
}

ValidMask build_valid_mask(std::span<const ResidualPair> pairs, const CameraModel& cam,
                           const PanoramaGeometry& geom, const RotationTrajectory& traj) {
  ValidMask mask(geom.pixel_count(), 0);
  auto mark = [&](const Vec3& bearing, double t) {
    const Vec3 z = traj.interpolate(t).rotation * bearing;
    const PixelIndex px = nearest_pixel(geom, project_equirect(geom, z));
    mask[static_cast<std::size_t>(px.row) * geom.width + px.col] = 1;
  };
  for (const ResidualPair& pair : pairs) {
    const Vec3 bearing = back_project(cam, pair.x, pair.y);
    mark(bearing, pair.t);
    mark(bearing, pair.t_prev);
  }
  return mask;
}

std::size_t count_valid(const ValidMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

}  // namespace rotpba

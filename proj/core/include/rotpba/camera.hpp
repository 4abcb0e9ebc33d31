#pragma once

#include "rotpba/so3.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

/// Ideal pinhole camera (no lens distortion).
struct CameraModel {
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

/// Equirectangular panorama. Azimuth atan2(z_x, z_z) spans [-pi, pi) left to right; the polar
/// angle from the -y axis spans [0, pi] top to bottom, so the optical axis +z lands on the
/// center row and camera-down (+y) on the bottom pole. Pixel (c, r) covers
/// [c, c+1) x [r, r+1) with its center at (c + 0.5, r + 0.5).
struct PanoramaGeometry {
  int width = 0;
  int height = 0;

  void validate() const;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

/// Continuous map coordinates in pixels.
using MapPoint = Vec2;

struct PixelIndex {
  int col = 0;
  int row = 0;

  bool operator==(const PixelIndex&) const = default;
};

/// Bearings closer than this (radians) to either pole are treated as singular.
inline constexpr double kPoleGuard = 1e-6;

/// K^-1 (x, y, 1)^T, not normalized.
Vec3 back_project(const CameraModel& cam, double x, double y);

/// Throws Error(kDegenerateBearing) if ||z|| < 1e-12.
MapPoint project_equirect(const PanoramaGeometry& geom, const Vec3& z);

/// d(pi)/dz at z. Throws Error(kPoleSingularity) within kPoleGuard of a pole.
Mat23 equirect_jacobian(const PanoramaGeometry& geom, const Vec3& z);

/// Unit bearing of a continuous map point (inverse of project_equirect).
Vec3 lift_equirect(const PanoramaGeometry& geom, const MapPoint& p);

bool near_pole(const Vec3& z);

/// Nearest pixel: floor of the coordinates, column wrapped modulo the width, row clamped.
PixelIndex nearest_pixel(const PanoramaGeometry& geom, const MapPoint& p);

/// Pixel center coordinates.
MapPoint pixel_center(const PixelIndex& px);

/// p(t) = pi(R(t) K^-1 x^h).
MapPoint warp(const CameraModel& cam, const PanoramaGeometry& geom,
              const RotationTrajectory& traj, double x, double y, double t);

/// Horizontal distance between two map points measured modulo the panorama width.
double wrapped_dx(const PanoramaGeometry& geom, double a, double b);

}  // namespace rotpba

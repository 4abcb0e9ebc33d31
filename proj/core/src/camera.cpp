#include "rotpba/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {
constexpr double kPi = std::numbers::pi;
}

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::kConfig, "camera: non-positive sensor size");
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::kConfig, "camera: focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::kConfig, "camera: principal point outside the sensor");
  }
}

void PanoramaGeometry::validate() const {
  if (width < 2 || height < 2) throw Error(ErrorKind::kConfig, "panorama: size must be at least 2x2");
  if (width != 2 * height) throw Error(ErrorKind::kConfig, "panorama: width must equal 2 * height");
}

Vec3 back_project(const CameraModel& cam, double x, double y) {
  return {(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
}

MapPoint project_equirect(const PanoramaGeometry& geom, const Vec3& z) {
  const double n = z.norm();
  if (n < 1e-12) throw Error(ErrorKind::kDegenerateBearing, "projection: bearing has zero length");
  double px = (std::atan2(z.x(), z.z()) + kPi) * geom.width / (2.0 * kPi);
  if (px >= geom.width) px -= geom.width;
  const double py = std::acos(std::clamp(-z.y() / n, -1.0, 1.0)) * geom.height / kPi;
  return {px, py};
}

bool near_pole(const Vec3& z) {
  const double rho = std::hypot(z.x(), z.z());
  return rho < std::sin(kPoleGuard) * z.norm();
}

Mat23 equirect_jacobian(const PanoramaGeometry& geom, const Vec3& z) {
  const double rho2 = z.x() * z.x() + z.z() * z.z();
  const double n2 = rho2 + z.y() * z.y();
  const double rho = std::sqrt(rho2);
  if (n2 < 1e-24) throw Error(ErrorKind::kDegenerateBearing, "projection: bearing has zero length");
  if (rho < std::sin(kPoleGuard) * std::sqrt(n2)) {
    throw Error(ErrorKind::kPoleSingularity, "projection: bearing within pole guard");
  }
  const double sx = geom.width / (2.0 * kPi);
  const double sy = geom.height / kPi;
  Mat23 j;
  j(0, 0) = sx * z.z() / rho2;
  j(0, 1) = 0.0;
  j(0, 2) = -sx * z.x() / rho2;
  const double k = sy / (rho * n2);
  j(1, 0) = -k * z.y() * z.x();
  j(1, 1) = k * rho2;
  j(1, 2) = -k * z.y() * z.z();
  return j;
}

Vec3 lift_equirect(const PanoramaGeometry& geom, const MapPoint& p) {
  const double az = p.x() * 2.0 * kPi / geom.width - kPi;
  const double polar = p.y() * kPi / geom.height;
  const double s = std::sin(polar);
  return {s * std::sin(az), -std::cos(polar), s * std::cos(az)};
}

PixelIndex nearest_pixel(const PanoramaGeometry& geom, const MapPoint& p) {
  int col = static_cast<int>(std::floor(p.x()));
  col %= geom.width;
  if (col < 0) col += geom.width;
  const int row = std::clamp(static_cast<int>(std::floor(p.y())), 0, geom.height - 1);
  return {col, row};
}

MapPoint pixel_center(const PixelIndex& px) { return {px.col + 0.5, px.row + 0.5}; }

MapPoint warp(const CameraModel& cam, const PanoramaGeometry& geom,
              const RotationTrajectory& traj, double x, double y, double t) {
  const InterpolatedPose pose = traj.interpolate(t);
  return project_equirect(geom, pose.rotation * back_project(cam, x, y));
}

double wrapped_dx(const PanoramaGeometry& geom, double a, double b) {
  double d = std::fmod(a - b, static_cast<double>(geom.width));
  if (d > 0.5 * geom.width) d -= geom.width;
  if (d < -0.5 * geom.width) d += geom.width;
  return d;
}

}  // namespace rotpba

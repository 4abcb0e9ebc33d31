#include "rotpba/so3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace rotpba {

namespace {

// sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3 with 4th-order series near zero.
struct RodriguesCoeffs {
  double a;
  double b;
  double c;
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    const double t4 = t2 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0};
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return {s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta)};
}

}  // namespace

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Rotation exp_so3(const Vec3& phi) {
  const RodriguesCoeffs k = rodrigues_coeffs(phi.norm());
  const Mat3 w = hat(phi);
  return Mat3::Identity() + k.a * w + k.b * (w * w);
}

LogResult log_so3_checked(const Rotation& r) {
  constexpr double pi = std::numbers::pi;
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vec3 sin_axis = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double sin_theta = sin_axis.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  LogResult out;
  out.near_branch_cut = (pi - theta) < kNearPiFlag;

  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    out.phi = sin_axis * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
    return out;
  }
  if (pi - theta < 1e-3) {
    // sin(theta) carries too few significant digits here; read the axis off the symmetric part,
    // (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T.
    const Mat3 aat = (0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
    Eigen::Index k = 0;
    aat.diagonal().maxCoeff(&k);
    Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
    axis.normalize();
    if (axis.dot(sin_axis) < 0.0) axis = -axis;
    out.phi = theta * axis;
    return out;
  }
  out.phi = sin_axis * (theta / sin_theta);
  return out;
}

Mat3 left_jacobian(const Vec3& phi) {
  const RodriguesCoeffs k = rodrigues_coeffs(phi.norm());
  const Mat3 w = hat(phi);
  return Mat3::Identity() + k.b * w + k.c * (w * w);
}

Mat3 left_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const double t2 = theta * theta;
  double d;
  if (theta < kSmallAngle) {
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    d = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / t2;
  }
  const Mat3 w = hat(phi);
  return Mat3::Identity() - 0.5 * w + d * (w * w);
}

Mat3 interp_jacobian(double u, const Vec3& phi) {
  if (u == 0.0) return Mat3::Zero();
  if (u == 1.0) return Mat3::Identity();
  return u * left_jacobian(u * phi) * left_jacobian_inverse(phi);
}

Rotation orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

double angle_between(const Rotation& a, const Rotation& b) {
  const Mat3 d = a.transpose() * b;
  const double c = std::clamp(0.5 * (d.trace() - 1.0), -1.0, 1.0);
  const double s = 0.5 * vee(d - d.transpose()).norm();
  return std::atan2(s, c);
}

Eigen::Quaterniond to_quaternion(const Rotation& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Rotation from_quaternion(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

}  // namespace rotpba

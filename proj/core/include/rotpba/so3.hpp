#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rotpba {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Row3 = Eigen::RowVector3d;

// Rotations are stored as plain 3x3 matrices; quaternions only appear in file I/O.
using Rotation = Mat3;

/// Below this angle exp/log/J/J^-1 switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-4;

/// log_so3 flags rotations whose angle lies this close to pi.
inline constexpr double kNearPiFlag = 1e-7;

Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);

Rotation exp_so3(const Vec3& phi);

struct LogResult {
  Vec3 phi = Vec3::Zero();
  bool near_branch_cut = false;  // angle within kNearPiFlag of pi; the sign of phi is arbitrary there
};

/// Principal logarithm with ||phi|| <= pi.
LogResult log_so3_checked(const Rotation& r);
inline Vec3 log_so3(const Rotation& r) { return log_so3_checked(r).phi; }

/// Left Jacobian of SO(3) and its inverse.
Mat3 left_jacobian(const Vec3& phi);
Mat3 left_jacobian_inverse(const Vec3& phi);

/// Interpolation Jacobian A(u, phi) = u J(u phi) J^-1(phi).
///
/// For R(u) = exp(u phi) R_i with exp(phi) = R_{i+1} R_i^T, left perturbations of the two
/// bracketing poses propagate to R(u) as (I - A) dphi_i + A dphi_{i+1}.
Mat3 interp_jacobian(double u, const Vec3& phi);

/// Closest rotation in the Frobenius sense (polar factor).
Rotation orthonormalize(const Mat3& m);

/// Geodesic angle between two rotations, radians.
double angle_between(const Rotation& a, const Rotation& b);

Eigen::Quaterniond to_quaternion(const Rotation& r);
Rotation from_quaternion(const Eigen::Quaterniond& q);

}  // namespace rotpba

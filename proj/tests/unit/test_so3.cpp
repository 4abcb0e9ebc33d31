#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rotpba/errors.hpp"
#include "rotpba/so3.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {
namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 random_vec(std::mt19937_64& rng, double norm_lo, double norm_hi) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(norm_lo, norm_hi);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized() * u(rng);
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

TEST(Hat, UnitX) {
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_EQ(hat(Vec3(1, 0, 0)), expected);
  EXPECT_EQ(hat(Vec3::Zero()), Mat3::Zero());
}

TEST(Hat, MatchesCrossProductAndIsSkew) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = random_vec(rng, 0.0, 5.0);
    const Vec3 w = random_vec(rng, 0.0, 5.0);
    const Vec3 cross(v.y() * w.z() - v.z() * w.y(), v.z() * w.x() - v.x() * w.z(), v.x() * w.y() - v.y() * w.x());
    EXPECT_LT((hat(v) * w - cross).norm(), 1e-14);
    EXPECT_EQ(hat(v).transpose(), -hat(v));
    EXPECT_EQ(vee(hat(v)), v);
  }
}

TEST(Exp, ZeroAndQuarterTurn) {
  EXPECT_EQ(exp_so3(Vec3::Zero()), Mat3::Identity());
  const Vec3 y = exp_so3(Vec3(0, 0, kPi / 2)) * Vec3(1, 0, 0);
  EXPECT_LT((y - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(Exp, InverseAndOrthonormal) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = random_vec(rng, 0.0, kPi);
    const Rotation r = exp_so3(phi);
    EXPECT_LT(max_abs(r * exp_so3(-phi) - Mat3::Identity()), 1e-14);
    EXPECT_LT(max_abs(r.transpose() * r - Mat3::Identity()), 1e-14);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(Log, KnownValues) {
  EXPECT_EQ(log_so3(Mat3::Identity()), Vec3::Zero());
  const Vec3 phi(0.1, -0.2, 0.3);
  EXPECT_LT((log_so3(exp_so3(phi)) - phi).norm(), 1e-10);
}

TEST(Log, NearPiAboutX) {
  // Rotation by pi - 1e-9 about x written out directly so the oracle does not depend on exp.
  const double a = kPi - 1e-9;
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  const LogResult res = log_so3_checked(r);
  EXPECT_NEAR(res.phi.norm(), a, 1e-6);
  EXPECT_NEAR(std::abs(res.phi.x()), res.phi.norm(), 1e-6);
  EXPECT_TRUE(res.near_branch_cut);
}

TEST(Log, RoundTripAcrossScales) {
  std::mt19937_64 rng(3);
  for (int decade = -12; decade <= 0; ++decade) {
    for (int i = 0; i < 50; ++i) {
      const double hi = decade == 0 ? kPi - 1e-6 : std::pow(10.0, decade + 1);
      const Vec3 phi = random_vec(rng, std::pow(10.0, decade), hi);
      const Vec3 back = log_so3(exp_so3(phi));
      EXPECT_LT((back - phi).norm(), 1e-10) << "norm " << phi.norm();
      EXPECT_LT(max_abs(exp_so3(back) - exp_so3(phi)), 1e-10);
    }
  }
}

TEST(Log, NormNeverExceedsPi) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = exp_so3(random_vec(rng, 0.0, 3.0 * kPi));
    EXPECT_LE(log_so3(r).norm(), kPi + 1e-12);
  }
}

TEST(LeftJacobian, IdentityAtZeroAndInverse) {
  EXPECT_EQ(left_jacobian(Vec3::Zero()), Mat3::Identity());
  EXPECT_EQ(left_jacobian_inverse(Vec3::Zero()), Mat3::Identity());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const Vec3 phi = random_vec(rng, 1e-8, 3.0);
    EXPECT_LT(max_abs(left_jacobian(phi) * left_jacobian_inverse(phi) - Mat3::Identity()), 1e-10);
  }
}

TEST(LeftJacobian, FiniteDifference) {
  // exp(phi + eps d) ~ exp((J(phi) eps d)^) exp(phi); the mismatch shrinks like eps^2.
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const Vec3 phi = random_vec(rng, 0.01, 3.0);
    const Vec3 d = random_vec(rng, 1.0, 1.0);
    double prev = 0.0;
    for (double eps : {1e-3, 1e-4}) {
      const Rotation lhs = exp_so3(phi + eps * d);
      const Rotation rhs = exp_so3(left_jacobian(phi) * (eps * d)) * exp_so3(phi);
      const double rel = log_so3(lhs * rhs.transpose()).norm() / eps;
      EXPECT_LT(rel, 10.0 * eps);
      if (prev > 0.0) EXPECT_LT(rel, prev);
      prev = rel;
    }
  }
}

TEST(InterpJacobian, Endpoints) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 phi = random_vec(rng, 0.0, 3.0);
    EXPECT_LT(max_abs(interp_jacobian(0.0, phi)), 1e-12);
    EXPECT_LT(max_abs(interp_jacobian(1.0, phi) - Mat3::Identity()), 1e-12);
  }
  for (double u : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_LT(max_abs(interp_jacobian(u, Vec3::Zero()) - u * Mat3::Identity()), 1e-15);
    // First-order term u (u - 1) / 2 * phi^ is at most |phi| / 8.
    EXPECT_LT(max_abs(interp_jacobian(u, Vec3(1e-9, 0, 0)) - u * Mat3::Identity()), 1.3e-10);
  }
}

TEST(InterpJacobian, PropagatesControlPosePerturbations) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Rotation r1 = exp_so3(random_vec(rng, 0.0, 2.0));
    const Rotation r2 = exp_so3(random_vec(rng, 0.05, 1.5)) * r1;
    const double u = uni(rng);
    const Vec3 d1 = random_vec(rng, 1.0, 1.0);
    const Vec3 d2 = random_vec(rng, 1.0, 1.0);
    auto interp = [u](const Rotation& a, const Rotation& b) { return exp_so3(u * log_so3(b * a.transpose())) * a; };
    const Vec3 phi = log_so3(r2 * r1.transpose());
    const Rotation base = interp(r1, r2);
    const Rotation plus = interp(exp_so3(eps * d1) * r1, exp_so3(eps * d2) * r2);
    const Rotation minus = interp(exp_so3(-eps * d1) * r1, exp_so3(-eps * d2) * r2);
    const Vec3 numeric = (log_so3(plus * base.transpose()) - log_so3(minus * base.transpose())) / (2 * eps);
    const Mat3 a = interp_jacobian(u, phi);
    const Vec3 analytic = (Mat3::Identity() - a) * d1 + a * d2;
    EXPECT_LT((numeric - analytic).norm() / analytic.norm(), 1e-4);
  }
}

TEST(Orthonormalize, LongCompositionChain) {
  std::mt19937_64 rng(9);
  Rotation r = Mat3::Identity();
  for (int i = 0; i < 1000000; ++i) {
    r = exp_so3(random_vec(rng, 0.0, 1e-2)) * r;
    if (i % 1000 == 999) r = orthonormalize(r);
  }
  r = orthonormalize(r);
  EXPECT_LT(max_abs(r.transpose() * r - Mat3::Identity()), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
}

TEST(Quaternion, RoundTrip) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = exp_so3(random_vec(rng, 0.0, kPi));
    EXPECT_LT(max_abs(from_quaternion(to_quaternion(r)) - r), 1e-14);
  }
}

// --- trajectory ------------------------------------------------------------------------------

RotationTrajectory random_trajectory(std::mt19937_64& rng, std::size_t n, double f, double step) {
  std::vector<Rotation> poses{exp_so3(random_vec(rng, 0.0, 2.0))};
  while (poses.size() < n) poses.push_back(exp_so3(random_vec(rng, 0.0, step)) * poses.back());
  return RotationTrajectory(0.5, f, poses);
}

TEST(Trajectory, KnotReturnsControlPose) {
  std::mt19937_64 rng(11);
  const RotationTrajectory traj = random_trajectory(rng, 6, 20.0, 0.5);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const InterpolatedPose ip = traj.interpolate(traj.time(i));
    EXPECT_LT(max_abs(ip.rotation - traj.pose(i)), 1e-14);
    if (i + 1 < traj.size()) {
      EXPECT_EQ(ip.segment, i);
      EXPECT_EQ(ip.u, 0.0);
    }
  }
}

TEST(Trajectory, GeodesicMidpoint) {
  const RotationTrajectory traj(0.0, 1.0, {Mat3::Identity(), exp_so3(Vec3(0, 0, 0.2))});
  const InterpolatedPose ip = traj.interpolate(0.5);
  EXPECT_LT(max_abs(ip.rotation - exp_so3(Vec3(0, 0, 0.1))), 1e-15);
  EXPECT_DOUBLE_EQ(ip.u, 0.5);
}

TEST(Trajectory, MatchesQuaternionSlerp) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const RotationTrajectory traj = random_trajectory(rng, 8, 20.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const double t = traj.begin_time() + uni(rng) * (traj.end_time() - traj.begin_time());
    const auto [seg, u] = traj.locate(t);
    const Eigen::Quaterniond qa = to_quaternion(traj.pose(seg));
    const Eigen::Quaterniond qb = to_quaternion(traj.pose(seg + 1));
    const Rotation slerp = qa.slerp(u, qb).toRotationMatrix();
    EXPECT_LT(max_abs(traj.interpolate(t).rotation - slerp), 1e-12);
  }
}

TEST(Trajectory, ContinuousAcrossKnots) {
  std::mt19937_64 rng(13);
  const RotationTrajectory traj = random_trajectory(rng, 5, 20.0, 0.5);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    double prev = 1.0;
    for (double eps : {1e-3, 1e-5, 1e-7}) {
      const double gap = angle_between(traj.interpolate(traj.time(i) - eps).rotation,
                                       traj.interpolate(traj.time(i) + eps).rotation);
      EXPECT_LT(gap, prev);
      prev = gap;
    }
    EXPECT_LT(prev, 1e-4);
  }
}

TEST(Trajectory, OutOfSpanIsQueryError) {
  const RotationTrajectory traj(0.0, 10.0, {Mat3::Identity(), Mat3::Identity()});
  try {
    traj.interpolate(0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kQuery);
  }
  EXPECT_THROW(traj.interpolate(-1e-3), Error);
  EXPECT_NO_THROW(traj.interpolate(0.1));
}

TEST(Trajectory, FromStampedRequiresUniformSpacing) {
  const std::vector<Rotation> r(3, Mat3::Identity());
  EXPECT_NO_THROW(RotationTrajectory::from_stamped(StampedTrajectory({0.0, 0.05, 0.1}, r)));
  EXPECT_THROW(RotationTrajectory::from_stamped(StampedTrajectory({0.0, 0.05, 0.11}, r)), Error);
  EXPECT_THROW(StampedTrajectory({0.0, 0.0, 0.1}, r), Error);
}

TEST(Trajectory, ResampleReproducesSource) {
  std::mt19937_64 rng(14);
  const RotationTrajectory src = random_trajectory(rng, 11, 20.0, 0.3);
  const RotationTrajectory re = resample_uniform(src.to_stamped(), src.begin_time(), src.end_time(), 20.0);
  ASSERT_EQ(re.size(), src.size());
  for (std::size_t i = 0; i < re.size(); ++i) EXPECT_LT(max_abs(re.pose(i) - src.pose(i)), 1e-12);
  EXPECT_THROW(resample_uniform(src.to_stamped(), src.begin_time() - 0.1, src.end_time(), 20.0), Error);
}

TEST(Trajectory, LeftUpdateStaysOrthonormal) {
  RotationTrajectory traj(0.0, 1.0, {Mat3::Identity(), Mat3::Identity()});
  std::mt19937_64 rng(15);
  for (int i = 0; i < 10000; ++i) traj.apply_left_update(1, random_vec(rng, 0.0, 0.1));
  EXPECT_LT(max_abs(traj.pose(1).transpose() * traj.pose(1) - Mat3::Identity()), 1e-12);
}

}  // namespace
}  // namespace rotpba

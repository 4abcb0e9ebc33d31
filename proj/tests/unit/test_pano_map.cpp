#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "rotpba/densify.hpp"
#include "rotpba/errors.hpp"
#include "rotpba/evaluation.hpp"
#include "rotpba/pano_map.hpp"
#include "rotpba/simulator.hpp"

namespace rotpba {
namespace {

constexpr double kPi = 3.14159265358979323846;

DenseMap smooth_map(const PanoramaGeometry& geom) {
  DenseMap m(geom);
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) {
      const double az = 2 * kPi * (c + 0.5) / geom.width;
      const double el = kPi * (r + 0.5) / geom.height;
      m.at(c, r) = 0.6 * std::sin(az) * std::sin(el) + 0.3 * std::cos(2 * az + 0.4) * std::sin(el) * std::sin(el) +
                   0.2 * std::cos(el);
    }
  }
  return m;
}

ValidMask random_mask(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  ValidMask mask(n);
  for (auto& v : mask) v = b(rng) ? 1 : 0;
  return mask;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / v.size());
}

TEST(ValidMask, ZeroAndSinglePair) {
  const CameraModel cam{32, 24, 20.0, 20.0, 15.5, 11.5};
  const PanoramaGeometry geom{256, 128};
  const RotationTrajectory traj(0.0, 10.0, {Mat3::Identity(), Mat3::Identity()});
  EXPECT_EQ(count_valid(build_valid_mask({}, cam, geom, traj)), 0u);
  const ResidualPair pair{1, 0.05, 0.02, 15, 11, 1};
  const ValidMask mask = build_valid_mask(std::vector<ResidualPair>{pair}, cam, geom, traj);
  EXPECT_EQ(count_valid(mask), 1u);
  const PixelIndex px = nearest_pixel(geom, warp(cam, geom, traj, 15, 11, 0.05));
  EXPECT_EQ(mask[px.row * geom.width + px.col], 1);
}

TEST(ValidMask, MatchesBruteForceRasterization) {
  const CameraModel cam{32, 24, 20.0, 20.0, 15.5, 11.5};
  const PanoramaGeometry geom{256, 128};
  std::vector<Rotation> poses;
  for (int i = 0; i < 6; ++i) poses.push_back(exp_so3(Vec3(0.05 * i, 0.2 * i, -0.03 * i)));
  const RotationTrajectory traj(0.0, 20.0, poses);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ut(0.0, 0.25);
  std::uniform_int_distribution<int> ux(0, 31), uy(0, 23);
  std::vector<ResidualPair> pairs;
  for (int i = 0; i < 2000; ++i) {
    double a = ut(rng), b = ut(rng);
    if (a == b) continue;
    pairs.push_back({0, std::max(a, b), std::min(a, b), ux(rng), uy(rng), 1});
  }
  ValidMask brute(geom.pixel_count(), 0);
  for (const ResidualPair& p : pairs) {
    for (double t : {p.t, p.t_prev}) {
      const Eigen::Quaterniond q = to_quaternion(traj.interpolate(t).rotation);
      const Vec3 z = q * Vec3((p.x - cam.cx) / cam.fx, (p.y - cam.cy) / cam.fy, 1.0);
      const double px = (std::atan2(z.x(), z.z()) + kPi) * geom.width / (2 * kPi);
      const double py = std::acos(-z.y() / z.norm()) * geom.height / kPi;
      const int col = static_cast<int>(std::floor(px)) % geom.width;
      const int row = std::min(geom.height - 1, static_cast<int>(std::floor(py)));
      brute[row * geom.width + col] = 1;
    }
  }
  EXPECT_EQ(build_valid_mask(pairs, cam, geom, traj), brute);
}

TEST(PanoramaMap, IndexTableIsBijection) {
  const PanoramaGeometry geom{64, 32};
  const ValidMask mask = random_mask(geom.pixel_count(), 0.3, 3);
  const PanoramaMap map(DenseMap(geom), mask);
  EXPECT_EQ(map.state_size(), count_valid(mask));
  for (std::size_t n = 0; n < map.state_size(); ++n) {
    const std::size_t flat = map.pixel_of_state(n);
    EXPECT_EQ(mask[flat], 1);
    EXPECT_EQ(map.state_index({static_cast<int>(flat % geom.width), static_cast<int>(flat / geom.width)}),
              static_cast<std::int32_t>(n));
    if (n > 0) EXPECT_GT(flat, map.pixel_of_state(n - 1));
  }
}

TEST(Sample, ConstantMap) {
  const PanoramaGeometry geom{64, 32};
  const PanoramaMap map(DenseMap(geom, 1.25), ValidMask(geom.pixel_count(), 1));
  EXPECT_EQ(map.sample(MapPoint(10.2, 5.9)), 1.25);
  EXPECT_EQ(map.sample_gradient(MapPoint(10.2, 5.9)), Vec2::Zero());
}

TEST(Sample, InvalidPixelThrows) {
  const PanoramaGeometry geom{64, 32};
  ValidMask mask(geom.pixel_count(), 1);
  mask[5 * 64 + 10] = 0;
  const PanoramaMap map(DenseMap(geom), mask);
  try {
    map.sample(MapPoint(10.5, 5.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSample);
  }
  EXPECT_THROW(map.sample_gradient(MapPoint(10.5, 5.5)), Error);
}

TEST(Gradient, RampIsExactInInterior) {
  const PanoramaGeometry geom{64, 32};
  DenseMap m(geom);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) m.at(c, r) = 0.3 * c;
  const PanoramaMap map(m, ValidMask(geom.pixel_count(), 1));
  for (int r = 1; r < 31; ++r)
    for (int c = 1; c < 63; ++c) EXPECT_LT((map.gradient_at({c, r}) - Vec2(0.3, 0.0)).norm(), 1e-14);
}

TEST(Gradient, MatchesMaskedStencilOracle) {
  const PanoramaGeometry geom{64, 32};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  DenseMap m(geom);
  for (double& v : m.values()) v = n(rng);
  const ValidMask mask = random_mask(geom.pixel_count(), 0.6, 5);
  const PanoramaMap map(m, mask);
  auto ok = [&](int c, int r) { return mask[r * 64 + c] != 0; };
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 64; ++c) {
      if (!ok(c, r)) continue;
      const double v = m.at(c, r);
      const int cl = (c + 63) % 64, cr = (c + 1) % 64;
      const int ru = std::max(r - 1, 0), rd = std::min(r + 1, 31);
      const double left = ok(cl, r) ? m.at(cl, r) : v;
      const double right = ok(cr, r) ? m.at(cr, r) : v;
      const double up = ok(c, ru) ? m.at(c, ru) : v;
      const double down = ok(c, rd) ? m.at(c, rd) : v;
      const Vec2 expected(0.5 * (right - left), 0.5 * (down - up));
      EXPECT_EQ(map.gradient_at({c, r}), expected) << c << "," << r;
    }
  }
}

TEST(Gradient, NeverReadsInvalidPixels) {
  // Poison every invalid pixel: any read of one would surface as a non-finite gradient.
  const PanoramaGeometry geom{64, 32};
  const ValidMask mask = random_mask(geom.pixel_count(), 0.5, 6);
  DenseMap m(geom, 0.1);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) m[i] = std::numeric_limits<double>::quiet_NaN();
  const PanoramaMap map(m, mask);
  for (std::size_t n = 0; n < map.state_size(); ++n) {
    const std::size_t f = map.pixel_of_state(n);
    const PixelIndex px{static_cast<int>(f % 64), static_cast<int>(f / 64)};
    EXPECT_TRUE(map.gradient_at(px).allFinite());
    EXPECT_TRUE(std::isfinite(map.sample(pixel_center(px))));
  }
}

TEST(Gradient, IsolatedPixelIsZero) {
  const PanoramaGeometry geom{64, 32};
  ValidMask mask(geom.pixel_count(), 0);
  mask[10 * 64 + 20] = 1;
  DenseMap m(geom);
  for (double& v : m.values()) v = 3.0;
  m.at(20, 10) = 1.0;
  EXPECT_EQ(PanoramaMap(m, mask).gradient_at({20, 10}), Vec2::Zero());
}

TEST(ApplyUpdate, UnitBasisAndZero) {
  const PanoramaGeometry geom{64, 32};
  const ValidMask mask = random_mask(geom.pixel_count(), 0.4, 7);
  PanoramaMap map(DenseMap(geom, 0.5), mask);
  const DenseMap before = map.values();
  map.apply_update(std::vector<double>(map.state_size(), 0.0));
  EXPECT_EQ(map.values().values(), before.values());
  std::vector<double> delta(map.state_size(), 0.0);
  delta[17] = 1.0;
  map.apply_update(delta);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(map.values()[i], before[i] + (i == map.pixel_of_state(17) ? 1.0 : 0.0));
  }
  try {
    map.apply_update(std::vector<double>(3, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

// --- densification -----------------------------------------------------------------------------

TEST(Densify, ConstantMap) {
  const PanoramaGeometry geom{64, 32};
  const PanoramaMap map(DenseMap(geom, 0.8), random_mask(geom.pixel_count(), 0.3, 8));
  const DenseMap out = densify(map);
  for (double v : out.values()) EXPECT_NEAR(v, 0.8, 1e-12);
}

TEST(Densify, AllValidRampReproducedAwayFromSeam) {
  const PanoramaGeometry geom{64, 32};
  DenseMap m(geom);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) m.at(c, r) = 0.05 * c;
  const DenseMap out = densify(PanoramaMap(m, ValidMask(geom.pixel_count(), 1)));
  const double offset = out.at(20, 10) - m.at(20, 10);
  for (int r = 0; r < 32; ++r)
    for (int c = 2; c < 62; ++c) EXPECT_NEAR(out.at(c, r) - m.at(c, r), offset, 1e-6);
}

TEST(Densify, ConnectedHalfMaskReproducesValidRegion) {
  const PanoramaGeometry geom{64, 32};
  const DenseMap m = smooth_map(geom);
  ValidMask mask(geom.pixel_count());
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) mask[r * 64 + c] = (r >= 8 && r < 24) ? 1 : 0;
  const DenseMap out = densify(PanoramaMap(m, mask));
  double lo = 1e9, hi = -1e9;
  std::vector<double> dev;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (mask[i]) {
      dev.push_back(out[i] - m[i]);
      lo = std::min(lo, m[i]);
      hi = std::max(hi, m[i]);
    }
  double mean = 0.0;
  for (double d : dev) mean += d;
  mean /= dev.size();
  for (double& d : dev) d -= mean;
  EXPECT_LT(rms(dev), 0.05 * (hi - lo));
}

TEST(Densify, AllValidSmoothMapReproducedUpToConstant) {
  const PanoramaGeometry geom{64, 32};
  const DenseMap m = smooth_map(geom);
  const DenseMap out = densify(PanoramaMap(m, ValidMask(geom.pixel_count(), 1)));
  double mean = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) mean += out[i] - m[i];
  mean /= m.size();
  std::vector<double> dev;
  for (std::size_t i = 0; i < m.size(); ++i) dev.push_back(out[i] - m[i] - mean);
  EXPECT_LT(rms(dev), 1e-6);
}

TEST(Densify, BlockMaskMatchesDirectSolve) {
  const PanoramaGeometry geom{64, 32};
  const DenseMap m = smooth_map(geom);
  ValidMask mask(geom.pixel_count());
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) mask[r * 64 + c] = ((c / 4 + r / 4) % 2 == 0) ? 1 : 0;
  const PanoramaMap map(m, mask);
  const DenseMap out = densify(map);

  // Dense weighted least-squares oracle over the same rows: 3-tap central and 2-tap forward
  // differences, weight 1 where all taps are valid and 0.01 (sqrt 0.1) elsewhere.
  const int n = 64 * 32;
  auto at = [](int c, int r) { return r * 64 + ((c % 64) + 64) % 64; };
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](int plus, int minus, double coef) {
    const bool supported = mask[plus] && mask[minus];
    const double s = supported ? 1.0 : 0.1;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row[plus] += coef * s;
    row[minus] -= coef * s;
    rows.push_back(row);
    rhs.push_back(supported ? s * coef * (m[plus] - m[minus]) : 0.0);
  };
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 64; ++c) {
      add_row(at(c + 1, r), at(c - 1, r), 0.5);
      if (r > 0 && r < 31) add_row(at(c, r + 1), at(c, r - 1), 0.5);
      add_row(at(c + 1, r), at(c, r), 1.0);
      if (r < 31) add_row(at(c, r + 1), at(c, r), 1.0);
    }
  }
  Eigen::MatrixXd d(rows.size(), n);
  for (std::size_t k = 0; k < rows.size(); ++k) d.row(static_cast<Eigen::Index>(k)) = rows[k];
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::MatrixXd normal = d.transpose() * d;
  normal.diagonal().array() += 1e-10;  // selects a solution in the constant direction
  const Eigen::VectorXd f = normal.llt().solve(d.transpose() * g);
  const double shift = out[0] - f[0];
  for (int i = 0; i < n; ++i) EXPECT_NEAR(out[i] - f[i], shift, 1e-5);
}

TEST(Densify, CorrelatesWithInputOnHalfMaskedMap) {
  const PanoramaGeometry geom{128, 64};
  const DenseMap m = smooth_map(geom);
  const ValidMask mask = random_mask(geom.pixel_count(), 0.5, 9);
  const DenseMap out = densify(PanoramaMap(m, mask));
  std::vector<double> a, b;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (mask[i]) {
      a.push_back(m[i]);
      b.push_back(out[i]);
    }
  EXPECT_GE(pearson_correlation(a, b), 0.99);
}

TEST(Densify, PreservesValidMean) {
  const PanoramaGeometry geom{64, 32};
  const DenseMap m = smooth_map(geom);
  const ValidMask mask = random_mask(geom.pixel_count(), 0.7, 10);
  const DenseMap out = densify(PanoramaMap(m, mask));
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (mask[i]) {
      a += m[i];
      b += out[i];
    }
  EXPECT_NEAR(a, b, 1e-9 * m.size());
}

}  // namespace
}  // namespace rotpba

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rotpba/errors.hpp"
#include "rotpba/evaluation.hpp"
#include "rotpba/lm_solver.hpp"
#include "support/scenes.hpp"

namespace rotpba {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

StampedTrajectory random_stamped(std::uint64_t seed, std::size_t n = 21) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.2);
  std::vector<double> t;
  std::vector<Rotation> r{exp_so3(Vec3(nd(rng), nd(rng), nd(rng)) * 5.0)};
  for (std::size_t i = 0; i < n; ++i) t.push_back(0.05 * i);
  while (r.size() < n) r.push_back(exp_so3(Vec3(nd(rng), nd(rng), nd(rng))) * r.back());
  return StampedTrajectory(t, r);
}

StampedTrajectory left_multiply(const Rotation& r0, const StampedTrajectory& s) {
  std::vector<Rotation> r;
  for (const Rotation& x : s.rotations()) r.push_back(r0 * x);
  return StampedTrajectory(s.times(), r);
}

TEST(AlignAt, IdenticalTrajectoriesUnchanged) {
  const StampedTrajectory gt = random_stamped(1);
  const AlignedTrajectoryPair pair = align_at(gt, gt, 0.3);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_LT((pair.estimate.rotation(i) - gt.rotation(i)).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_LT(are_rmse(pair), 1e-12);
}

TEST(AlignAt, RemovesConstantLeftOffset) {
  const StampedTrajectory gt = random_stamped(2);
  const StampedTrajectory est = left_multiply(exp_so3(Vec3(0.4, -1.0, 2.0)), gt);
  const AlignedTrajectoryPair pair = align_at(est, gt, 0.37);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(angle_between(pair.estimate.rotation(i), gt.rotation(i)), 1e-12);
  EXPECT_LT(are_rmse(pair), 1e-9);
}

TEST(AlignAt, AgreesAtAnchor) {
  for (std::uint64_t seed = 3; seed < 23; ++seed) {
    const StampedTrajectory gt = random_stamped(seed);
    const StampedTrajectory est = random_stamped(seed + 100);
    const double t0 = 0.013 * (seed % 70);
    const AlignedTrajectoryPair pair = align_at(est, gt, t0);
    EXPECT_LT(angle_between(pair.estimate.interpolate(t0), gt.interpolate(t0)), 1e-12);
  }
}

TEST(AlignAt, AnchorOutsideSpan) {
  const StampedTrajectory gt = random_stamped(4);
  EXPECT_THROW(align_at(gt, gt, 5.0), Error);
}

TEST(AreRmse, ConstantOffsetAfterAnchor) {
  const StampedTrajectory gt = random_stamped(5);
  std::vector<Rotation> r;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    r.push_back(gt.time(i) > 0.2 + 1e-9 ? exp_so3(Vec3(0, 0, kDeg)) * gt.rotation(i) : gt.rotation(i));
  }
  const AlignedTrajectoryPair pair = align_at(StampedTrajectory(gt.times(), r), gt, 0.2);
  std::vector<double> stamps;
  for (double t : gt.times())
    if (t > 0.2 + 1e-9) stamps.push_back(t);
  EXPECT_NEAR(are_rmse(pair, stamps), 1.0, 1e-9);
}

TEST(AreRmse, MatchesQuaternionOracle) {
  const StampedTrajectory gt = random_stamped(6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 0.01);
  std::vector<Rotation> r;
  for (const Rotation& x : gt.rotations()) r.push_back(exp_so3(Vec3(nd(rng), nd(rng), nd(rng))) * x);
  const AlignedTrajectoryPair pair = align_at(StampedTrajectory(gt.times(), r), gt, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Eigen::Quaterniond a = to_quaternion(pair.estimate.rotation(i));
    const Eigen::Quaterniond b = to_quaternion(gt.rotation(i));
    const double angle = 2.0 * std::acos(std::min(1.0, std::abs(a.dot(b))));
    sum += angle * angle;
  }
  EXPECT_NEAR(are_rmse(pair), std::sqrt(sum / gt.size()) / kDeg, 1e-6);
}

TEST(AreRmse, InvariantUnderCommonLeftMultiplication) {
  const StampedTrajectory gt = random_stamped(8);
  const StampedTrajectory est = random_stamped(9);
  const Rotation r0 = exp_so3(Vec3(1.0, 2.0, -0.5));
  const double a = are_rmse(align_at(est, gt, 0.1));
  const double b = are_rmse(align_at(left_multiply(r0, est), left_multiply(r0, gt), 0.1));
  EXPECT_NEAR(a, b, 1e-9);
}

TEST(AreRmse, EmptyAndOutOfSpanStamps) {
  const StampedTrajectory gt = random_stamped(10);
  const AlignedTrajectoryPair pair = align_at(gt, gt, 0.0);
  EXPECT_THROW(are_rmse(pair, {}), Error);
  EXPECT_THROW(are_rmse(pair, {10.0}), Error);
  EXPECT_EQ(fixed_rate_stamps(pair, 10.0).size(), 11u);
}

TEST(Histogram, ZeroResidualsInCenterBin) {
  const Histogram h = residual_histogram(std::vector<double>(10, 0.0), 0.2, 61);
  EXPECT_EQ(h.counts[30], 10u);
  EXPECT_EQ(h.mode(), 30u);
  EXPECT_DOUBLE_EQ(h.bin_center(30), 0.0);
  EXPECT_DOUBLE_EQ(h.lo, -0.6);
  EXPECT_DOUBLE_EQ(h.hi, 0.6);
}

TEST(Histogram, OutliersClampToEndBins) {
  const Histogram h = residual_histogram({-5.0, 5.0, 0.59999}, 0.2, 12);
  EXPECT_EQ(h.counts.front(), 1u);
  EXPECT_EQ(h.counts.back(), 2u);
  EXPECT_EQ(h.total(), 3u);
}

TEST(Histogram, Csv) {
  const Histogram h = residual_histogram({0.0}, 0.5, 3);
  EXPECT_EQ(histogram_csv(h), "bin_center,count\n-1,0\n0,1\n1,0\n");
}

TEST(Phe, TwoResidualsOfMagnitudeC) {
  // Constant map: every residual is -p C; keep one pair of each polarity.
  const testing::Scene s = testing::make_scene(testing::small_options());
  Problem two{s.problem.camera, {}};
  for (const ResidualPair& p : s.problem.pairs) {
    if ((p.pol > 0 && two.pairs.empty()) || (p.pol < 0 && two.pairs.size() == 1)) two.pairs.push_back(p);
  }
  ASSERT_EQ(two.pairs.size(), 2u);
  const OptState st = make_initial_state(two, s.gt, s.options.geom);
  EXPECT_NEAR(phe(st, two, 0.2), 2 * 0.04, 1e-15);
  const Histogram h = residual_histogram(st, two, 0.2, 5);
  EXPECT_EQ(h.counts[1], 1u);
  EXPECT_EQ(h.counts[3], 1u);
}

TEST(Phe, GroundTruthHistogramPeaksAtZeroAndGaugeInvariant) {
  const testing::Scene s = testing::make_scene(testing::small_options());
  OptState st = testing::fitted_gt_state(s, {});
  const Histogram h = residual_histogram(st, s.problem, 0.2, 31);
  EXPECT_EQ(h.mode(), 15u);

  const Components comp = pair_graph_components(st, s.problem);
  ASSERT_GE(comp.count, 1);
  const double before = phe(st, s.problem, 0.2);
  for (std::size_t n = 0; n < st.map.state_size(); ++n) {
    st.map.set_state_value(n, st.map.state_value(n) + 0.25 * (comp.label[n] + 1));
  }
  EXPECT_NEAR(phe(st, s.problem, 0.2), before, 1e-12 * std::max(1.0, before));
}

TEST(Components, GaugeAlignAndCorrelation) {
  const PanoramaGeometry geom{8, 4};
  ValidMask mask(geom.pixel_count(), 0);
  mask[0] = mask[1] = mask[5] = 1;
  DenseMap ref(geom);
  ref[0] = 1.0;
  ref[1] = 2.0;
  ref[5] = 3.0;
  DenseMap values(geom);
  values[0] = 11.0;
  values[1] = 12.0;
  values[5] = -4.0;
  const PanoramaMap map(values, mask);
  const Components comp{{0, 0, 1}, 2};
  const std::vector<double> aligned = gauge_align(map, ref, comp);
  EXPECT_NEAR(aligned[0], 1.0, 1e-12);
  EXPECT_NEAR(aligned[1], 2.0, 1e-12);
  EXPECT_NEAR(aligned[2], 3.0, 1e-12);
  EXPECT_NEAR(pearson_correlation({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pearson_correlation({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
  EXPECT_EQ(fraction_below({0.01, -0.05, 0.2, 0.3}, 0.1), 0.5);
}

TEST(Metrics, CsvAndSummary) {
  MetricsReport m;
  m.add("phe_init", 2.5);
  m.add("phe_final", 0.125);
  EXPECT_EQ(m.csv(), "metric,value\nphe_init,2.5\nphe_final,0.125\n");
  EXPECT_NE(m.summary().find("phe_final"), std::string::npos);
}

}  // namespace
}  // namespace rotpba

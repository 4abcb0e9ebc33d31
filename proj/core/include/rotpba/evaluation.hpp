#pragma once

#include <string>
#include <vector>

#include "rotpba/residuals.hpp"
#include "rotpba/scene.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

/// Estimate and ground truth after removing the constant left offset at t0.
struct AlignedTrajectoryPair {
  StampedTrajectory estimate;
  StampedTrajectory ground_truth;
  double t0 = 0.0;
};

/// est(t) <- R_gt(t0) R_est(t0)^T est(t). Throws Error(kQuery) if t0 is outside either span.
AlignedTrajectoryPair align_at(const StampedTrajectory& est, const StampedTrajectory& gt, double t0);
AlignedTrajectoryPair align_at(const RotationTrajectory& est, const StampedTrajectory& gt, double t0);

/// RMS of the geodesic angles between estimate and ground truth, in degrees. Throws
/// Error(kQuery) on an empty set or a timestamp outside either span.
double are_rmse(const AlignedTrajectoryPair& pair, const std::vector<double>& timestamps);

/// ARE at the estimate's own stamps (its control-pose times).
double are_rmse(const AlignedTrajectoryPair& pair);

/// Uniform evaluation stamps at `rate` Hz over the overlap of both spans.
std::vector<double> fixed_rate_stamps(const AlignedTrajectoryPair& pair, double rate);

/// Sum of squared residuals over non-skipped pairs.
double phe(const OptState& state, const Problem& problem, double contrast);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  std::size_t mode() const;
  std::size_t total() const;
};

/// Histogram over [-3C, 3C]; values outside are clamped into the end bins.
Histogram residual_histogram(const std::vector<double>& residuals, double contrast, std::size_t bins);
Histogram residual_histogram(const OptState& state, const Problem& problem, double contrast,
                             std::size_t bins);

/// Fraction of values with |v| < threshold (0 for an empty set).
double fraction_below(const std::vector<double>& values, double threshold);

/// Connected components of the pixel-pair graph: valid pixels linked by a non-skipped pair.
/// Returns a component label per state index; labels are 0..count-1 in order of first appearance.
struct Components {
  std::vector<int> label;
  int count = 0;
};
Components pair_graph_components(const OptState& state, const Problem& problem);

/// Valid-pixel values of `map` shifted per component so each component's mean matches `reference`.
std::vector<double> gauge_align(const PanoramaMap& map, const DenseMap& reference, const Components& comp);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

struct MapComparison {
  double correlation = 0.0;
  double rms = 0.0;  // after per-component alignment
  std::size_t pixels = 0;
  int components = 0;
};

/// Compares the valid pixels of the state's map against a reference map of the same geometry.
MapComparison compare_map(const OptState& state, const Problem& problem, const DenseMap& reference);

/// Metrics report: CSV (metric,value) and a plain-text summary.
struct MetricsReport {
  std::vector<std::pair<std::string, double>> values;

  void add(const std::string& name, double v) { values.emplace_back(name, v); }
  std::string csv() const;
  std::string summary() const;
};

/// CSV with header bin_center,count.
std::string histogram_csv(const Histogram& h);

}  // namespace rotpba

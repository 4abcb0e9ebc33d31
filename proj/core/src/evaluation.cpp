#include "rotpba/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {

void require_span(const StampedTrajectory& traj, double t, const char* what) {
  if (traj.empty() || !traj.contains(t)) {
    std::ostringstream os;
    os << what << ": time " << t << " outside trajectory span";
    throw Error(ErrorKind::kQuery, os.str());
  }
}

// Union-find with path halving.
int find(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

AlignedTrajectoryPair align_at(const StampedTrajectory& est, const StampedTrajectory& gt, double t0) {
  require_span(est, t0, "align_at");
  require_span(gt, t0, "align_at");
  const Rotation offset = orthonormalize(gt.interpolate(t0) * est.interpolate(t0).transpose());
  std::vector<Rotation> rotations;
  rotations.reserve(est.size());
  for (const Rotation& r : est.rotations()) rotations.push_back(orthonormalize(offset * r));
  return {StampedTrajectory(est.times(), std::move(rotations)), gt, t0};
}

AlignedTrajectoryPair align_at(const RotationTrajectory& est, const StampedTrajectory& gt, double t0) {
  return align_at(est.to_stamped(), gt, t0);
}

double are_rmse(const AlignedTrajectoryPair& pair, const std::vector<double>& timestamps) {
  if (timestamps.empty()) throw Error(ErrorKind::kQuery, "are_rmse: empty timestamp set");
  double sum = 0.0;
  for (double t : timestamps) {
    require_span(pair.estimate, t, "are_rmse");
    require_span(pair.ground_truth, t, "are_rmse");
    const double a = angle_between(pair.estimate.interpolate(t), pair.ground_truth.interpolate(t));
    sum += a * a;
  }
  return std::sqrt(sum / static_cast<double>(timestamps.size())) * 180.0 / std::numbers::pi;
}

double are_rmse(const AlignedTrajectoryPair& pair) {
  std::vector<double> stamps;
  for (double t : pair.estimate.times()) {
    if (pair.ground_truth.contains(t)) stamps.push_back(t);
  }
  return are_rmse(pair, stamps);
}

std::vector<double> fixed_rate_stamps(const AlignedTrajectoryPair& pair, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorKind::kConfig, "evaluation rate must be positive");
  const double begin = std::max(pair.estimate.begin_time(), pair.ground_truth.begin_time());
  const double end = std::min(pair.estimate.end_time(), pair.ground_truth.end_time());
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double t = begin + static_cast<double>(k) / rate;
    if (t > end) break;
    out.push_back(t);
  }
  return out;
}

double phe(const OptState& state, const Problem& problem, double contrast) {
  return evaluate_loss(state, problem, contrast, RobustLoss{}).phe;
}

std::size_t Histogram::mode() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Histogram residual_histogram(const std::vector<double>& residuals, double contrast, std::size_t bins) {
  if (bins == 0 || !(contrast > 0.0)) throw Error(ErrorKind::kConfig, "histogram needs bins > 0 and C > 0");
  Histogram h;
  h.lo = -3.0 * contrast;
  h.hi = 3.0 * contrast;
  h.counts.assign(bins, 0);
  const double scale = static_cast<double>(bins) / (h.hi - h.lo);
  for (double e : residuals) {
    const double pos = std::floor((e - h.lo) * scale);
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    ++h.counts[static_cast<std::size_t>(clamped)];
  }
  return h;
}

Histogram residual_histogram(const OptState& state, const Problem& problem, double contrast,
                             std::size_t bins) {
  return residual_histogram(residual_values(state, problem, contrast), contrast, bins);
}

double fraction_below(const std::vector<double>& values, double threshold) {
  if (values.empty()) return 0.0;
  const auto n = std::count_if(values.begin(), values.end(), [&](double v) { return std::abs(v) < threshold; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

Components pair_graph_components(const OptState& state, const Problem& problem) {
  const int n = static_cast<int>(state.map.state_size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const TrajectoryCache cache(state.trajectory);
  for (const ResidualPair& pair : problem.pairs) {
    std::int32_t a = 0, b = 0;
    if (endpoint_states(state, cache, problem.camera, pair, a, b) != SkipReason::kNone) continue;
    const int ra = find(parent, a), rb = find(parent, b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  Components out;
  out.label.assign(n, -1);
  std::vector<int> root_label(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(parent, i);
    if (root_label[r] < 0) root_label[r] = out.count++;
    out.label[i] = root_label[r];
  }
  return out;
}

std::vector<double> gauge_align(const PanoramaMap& map, const DenseMap& reference, const Components& comp) {
  const std::size_t n = map.state_size();
  std::vector<double> sum(comp.count, 0.0);
  std::vector<std::size_t> count(comp.count, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[comp.label[i]] += reference[map.pixel_of_state(i)] - map.state_value(i);
    ++count[comp.label[i]];
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = comp.label[i];
    out[i] = map.state_value(i) + sum[c] / static_cast<double>(count[c]);
  }
  return out;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

MapComparison compare_map(const OptState& state, const Problem& problem, const DenseMap& reference) {
  const PanoramaMap& map = state.map;
  if (reference.width() != map.geometry().width || reference.height() != map.geometry().height) {
    throw Error(ErrorKind::kConfig, "compare_map: geometry mismatch");
  }
  const Components comp = pair_graph_components(state, problem);
  const std::vector<double> aligned = gauge_align(map, reference, comp);
  std::vector<double> ref(aligned.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    ref[i] = reference[map.pixel_of_state(i)];
    sq += (aligned[i] - ref[i]) * (aligned[i] - ref[i]);
  }
  MapComparison out;
  out.pixels = aligned.size();
  out.components = comp.count;
  out.correlation = pearson_correlation(aligned, ref);
  out.rms = aligned.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(aligned.size()));
  return out;
}

std::string MetricsReport::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "metric,value\n";
  for (const auto& [name, v] : values) os << name << ',' << v << '\n';
  return os.str();
}

std::string MetricsReport::summary() const {
  std::size_t width = 0;
  for (const auto& kv : values) width = std::max(width, kv.first.size());
  std::ostringstream os;
  os.precision(6);
  for (const auto& [name, v] : values) {
    os << name << std::string(width - name.size() + 2, ' ') << v << '\n';
  }
  return os.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os.precision(9);
  os << "bin_center,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) os << h.bin_center(i) << ',' << h.counts[i] << '\n';
  return os.str();
}

}  // namespace rotpba

#include "rotpba/normal_equations.hpp"

#include <algorithm>
#include <thread>

namespace rotpba {

std::size_t StateLayout::free_poses() const {
  if (map_only) return 0;
  if (gauge == GaugePolicy::kFixFirstPose) return num_poses > 0 ? num_poses - 1 : 0;
  return num_poses;
}

std::int64_t StateLayout::pose_column(std::size_t pose) const {
  if (map_only) return -1;
  if (gauge == GaugePolicy::kFixFirstPose) {
    return pose == 0 ? -1 : static_cast<std::int64_t>(3 * (pose - 1));
  }
  return static_cast<std::int64_t>(3 * pose);
}

StateLayout make_layout(const OptState& state, GaugePolicy gauge, bool map_only) {
  StateLayout layout;
  layout.num_poses = state.trajectory.size();
  layout.map_size = state.map.state_size();
  layout.gauge = gauge;
  layout.map_only = map_only;
  return layout;
}

namespace {

using Triplet = Eigen::Triplet<double, int>;

class Accumulator {
 public:
  explicit Accumulator(const StateLayout& layout)
      : layout_(layout),
        a11_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layout.pose_dim()),
                                   static_cast<Eigen::Index>(layout.pose_dim()))),
        b1_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.pose_dim()))),
        b2_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.map_size))) {}

  void add(const LinearizedResidual& r) {
    const double w = r.weight;
    const double e = r.error;

    int pose_cols[12];
    double pose_vals[12];
    int np = 0;
    for (int j = 0; j < r.pose_count; ++j) {
      const std::int64_t col = layout_.pose_column(static_cast<std::size_t>(r.pose[j]));
      if (col < 0) continue;  // gauge-fixed pose: its columns are projected out
      for (int d = 0; d < 3; ++d) {
        pose_cols[np] = static_cast<int>(col) + d;
        pose_vals[np] = r.pose_row[j][d];
        ++np;
      }
    }

    // Map part: +1 at the t_k pixel and -1 at the earlier pixel; both on one pixel cancel.
    int map_cols[2];
    double map_vals[2];
    int nm = 0;
    if (r.map_plus != r.map_minus) {
      map_cols[0] = r.map_plus;
      map_vals[0] = 1.0;
      map_cols[1] = r.map_minus;
      map_vals[1] = -1.0;
      nm = 2;
    }

    for (int a = 0; a < np; ++a) {
      const double wa = w * pose_vals[a];
      b1_[pose_cols[a]] -= wa * e;
      for (int b = 0; b < np; ++b) a11_(pose_cols[a], pose_cols[b]) += wa * pose_vals[b];
      for (int m = 0; m < nm; ++m) a12_.emplace_back(pose_cols[a], map_cols[m], wa * map_vals[m]);
    }
    for (int m = 0; m < nm; ++m) {
      b2_[map_cols[m]] -= w * map_vals[m] * e;
      for (int n = 0; n < nm; ++n) a22_.emplace_back(map_cols[m], map_cols[n], w * map_vals[m] * map_vals[n]);
    }
  }

  void merge(Accumulator&& other) {
    a11_ += other.a11_;
    b1_ += other.b1_;
    b2_ += other.b2_;
    a12_.insert(a12_.end(), other.a12_.begin(), other.a12_.end());
    a22_.insert(a22_.end(), other.a22_.begin(), other.a22_.end());
    other.a12_.clear();
    other.a22_.clear();
  }

  NormalEquations finish() && {
    NormalEquations ne;
    ne.layout = layout_;
    const auto pd = static_cast<Eigen::Index>(layout_.pose_dim());
    const auto md = static_cast<Eigen::Index>(layout_.map_size);
    ne.a11 = std::move(a11_);
    ne.b1 = std::move(b1_);
    ne.b2 = std::move(b2_);
    ne.a12.resize(pd, md);
    ne.a12.setFromTriplets(a12_.begin(), a12_.end());
    ne.a22.resize(md, md);
    ne.a22.setFromTriplets(a22_.begin(), a22_.end());
    return ne;
  }

 private:
  StateLayout layout_;
  Eigen::MatrixXd a11_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd b2_;
  std::vector<Triplet> a12_;
  std::vector<Triplet> a22_;
};

}  // namespace

Eigen::VectorXd NormalEquations::b() const {
  Eigen::VectorXd out(b1.size() + b2.size());
  out << b1, b2;
  return out;
}

Eigen::VectorXd NormalEquations::diagonal() const {
  Eigen::VectorXd out(a11.rows() + a22.rows());
  out << a11.diagonal(), a22.diagonal();
  return out;
}

SparseMatrix NormalEquations::assemble(bool lower_only) const {
  const auto pd = static_cast<int>(a11.rows());
  const auto dim = pd + static_cast<int>(a22.rows());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a11.size()) + 2 * a12.nonZeros() + a22.nonZeros());
  for (int c = 0; c < pd; ++c) {
    for (int r = lower_only ? c : 0; r < pd; ++r) {
      if (a11(r, c) != 0.0 || r == c) t.emplace_back(r, c, a11(r, c));
    }
  }
  for (int k = 0; k < a12.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a12, k); it; ++it) {
      t.emplace_back(pd + it.col(), it.row(), it.value());  // A12^T, lower block
      if (!lower_only) t.emplace_back(it.row(), pd + it.col(), it.value());
    }
  }
  for (int k = 0; k < a22.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a22, k); it; ++it) {
      if (lower_only && it.row() < it.col()) continue;
      t.emplace_back(pd + it.row(), pd + it.col(), it.value());
    }
  }
  SparseMatrix a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

Eigen::MatrixXd NormalEquations::dense() const { return Eigen::MatrixXd(assemble(false)); }

void NormalEquations::multiply(const Eigen::VectorXd& x, const Eigen::VectorXd& damping,
                               Eigen::VectorXd& out) const {
  const Eigen::Index pd = a11.rows();
  const Eigen::Index md = a22.rows();
  out.resize(pd + md);
  const auto x1 = x.head(pd);
  const auto x2 = x.tail(md);
  out.head(pd).noalias() = a11 * x1;
  out.head(pd).noalias() += a12 * x2;
  out.tail(md).noalias() = a22 * x2;
  out.tail(md).noalias() += a12.transpose() * x1;
  out.array() += damping.array() * x.array();
}

NormalEquations accumulate_normal_equations(std::span<const LinearizedResidual> residuals,
                                            const StateLayout& layout) {
  Accumulator acc(layout);
  for (const LinearizedResidual& r : residuals) acc.add(r);
  NormalEquations ne = std::move(acc).finish();
  ne.used_residuals = residuals.size();
  for (const LinearizedResidual& r : residuals) {
    ne.phe += r.error * r.error;
  }
  return ne;
}

NormalEquations build_normal_equations(const OptState& state, const Problem& problem,
                                       const StateLayout& layout, const BuildOptions& options) {
  const TrajectoryCache cache(state.trajectory);
  const std::size_t n = problem.pairs.size();
  const int workers = std::max(1, std::min<int>(options.threads, static_cast<int>(n / 1024) + 1));

  struct Partial {
    Accumulator acc;
    std::size_t used = 0;
    std::size_t skipped = 0;
    double phe = 0.0;
    double robust = 0.0;
  };
  std::vector<Partial> partials;
  partials.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) partials.push_back({Accumulator(layout)});

  auto run = [&](int w) {
    Partial& part = partials[static_cast<std::size_t>(w)];
    const std::size_t begin = n * static_cast<std::size_t>(w) / workers;
    const std::size_t end = n * static_cast<std::size_t>(w + 1) / workers;
    LinearizedResidual lin;
    for (std::size_t k = begin; k < end; ++k) {
      if (linearize(state, cache, problem.camera, problem.pairs[k], options.contrast, lin) !=
          SkipReason::kNone) {
        ++part.skipped;
        continue;
      }
      lin.weight = options.loss.weight(lin.error);
      part.acc.add(lin);
      part.phe += lin.error * lin.error;
      part.robust += options.loss.rho(lin.error);
      ++part.used;
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (std::thread& t : pool) t.join();
  }

  // Fixed merge order keeps the result independent of thread scheduling.
  Accumulator total(layout);
  NormalEquations ne;
  std::size_t used = 0, skipped = 0;
  double phe = 0.0, robust = 0.0;
  for (Partial& part : partials) {
    total.merge(std::move(part.acc));
    used += part.used;
    skipped += part.skipped;
    phe += part.phe;
    robust += part.robust;
  }
  ne = std::move(total).finish();
  ne.used_residuals = used;
  ne.skipped_residuals = skipped;
  ne.phe = phe;
  ne.robust_loss = robust;
  return ne;
}

}  // namespace rotpba

#include "rotpba/densify.hpp"

#include <algorithm>

#include "rotpba/cg.hpp"
#include "rotpba/errors.hpp"

namespace rotpba {

namespace {

// Row layout of the stacked operator D = [D3x; D3y; D2x; D2y], one row of each per pixel:
// 3-tap central differences (D3y undefined on the first and last rows) and 2-tap forward
// differences (D2y undefined on the last row). Azimuth wraps.
struct Rows {
  Eigen::VectorXd c3x, c3y, f2x, f2y;
  explicit Rows(std::size_t n) : c3x(n), c3y(n), f2x(n), f2y(n) {}
};

void apply_d(const PanoramaGeometry& g, const Eigen::VectorXd& f, Rows& out) {
  const int w = g.width;
  const int h = g.height;
  for (int r = 0; r < h; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      const std::size_t i = base + c;
      const std::size_t cl = base + (c == 0 ? w - 1 : c - 1);
      const std::size_t cr = base + (c == w - 1 ? 0 : c + 1);
      out.c3x[i] = 0.5 * (f[cr] - f[cl]);
      out.c3y[i] = (r == 0 || r == h - 1) ? 0.0 : 0.5 * (f[i + w] - f[i - w]);
      out.f2x[i] = f[cr] - f[i];
      out.f2y[i] = r == h - 1 ? 0.0 : f[i + w] - f[i];
    }
  }
}

// D^T applied to a stacked row vector.
void apply_dt(const PanoramaGeometry& g, const Rows& rows, Eigen::VectorXd& out) {
  const int w = g.width;
  const int h = g.height;
  for (int r = 0; r < h; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      const std::size_t i = base + c;
      const std::size_t cl = base + (c == 0 ? w - 1 : c - 1);
      const std::size_t cr = base + (c == w - 1 ? 0 : c + 1);
      double v = 0.5 * (rows.c3x[cl] - rows.c3x[cr]) + rows.f2x[cl] - rows.f2x[i];
      if (r - 1 >= 1) v += 0.5 * rows.c3y[i - w];
      if (r + 1 <= h - 2) v -= 0.5 * rows.c3y[i + w];
      if (r >= 1) v += rows.f2y[i - w];
      if (r <= h - 2) v -= rows.f2y[i];
      out[i] = v;
    }
  }
}

}  // namespace

GradientField semi_dense_gradients(const PanoramaMap& map) {
  const PanoramaGeometry& g = map.geometry();
  GradientField out{DenseMap(g), DenseMap(g)};
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const int cl = (c + g.width - 1) % g.width;
      const int cr = (c + 1) % g.width;
      if (map.valid(cl, r) && map.valid(cr, r)) {
        out.gx.at(c, r) = 0.5 * (map.values().at(cr, r) - map.values().at(cl, r));
      }
      if (r > 0 && r < g.height - 1 && map.valid(c, r - 1) && map.valid(c, r + 1)) {
        out.gy.at(c, r) = 0.5 * (map.values().at(c, r + 1) - map.values().at(c, r - 1));
      }
    }
  }
  return out;
}

DenseMap densify(const PanoramaMap& map, const DensifyOptions& options, DensifyReport* report) {
  const PanoramaGeometry& g = map.geometry();
  if (map.state_size() == 0) throw Error(ErrorKind::kDensify, "densify: map has no valid pixels");
  const std::size_t n = g.pixel_count();
  const int w = g.width;
  const int h = g.height;
  const double weak = options.unsupported_weight;

  // Target values and weights per row. A row is supported when all of its taps are valid.
  Rows target(n), weight(n);
  const GradientField field = semi_dense_gradients(map);
  const DenseMap& m = map.values();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const int cr = (c + 1) % w;
      const int cl = (c + w - 1) % w;
      target.c3x[i] = field.gx[i];
      weight.c3x[i] = map.valid(cl, r) && map.valid(cr, r) ? 1.0 : weak;
      target.c3y[i] = field.gy[i];
      weight.c3y[i] = (r == 0 || r == h - 1) ? 0.0 : map.valid(c, r - 1) && map.valid(c, r + 1) ? 1.0 : weak;
      const bool fx = map.valid(c, r) && map.valid(cr, r);
      target.f2x[i] = fx ? m.at(cr, r) - m.at(c, r) : 0.0;
      weight.f2x[i] = fx ? 1.0 : weak;
      const bool fy = r < h - 1 && map.valid(c, r) && map.valid(c, r + 1);
      target.f2y[i] = fy ? m.at(c, r + 1) - m.at(c, r) : 0.0;
      weight.f2y[i] = r == h - 1 ? 0.0 : fy ? 1.0 : weak;
    }
  }

  Rows scratch(n);
  scratch.c3x = weight.c3x.cwiseProduct(target.c3x);
  scratch.c3y = weight.c3y.cwiseProduct(target.c3y);
  scratch.f2x = weight.f2x.cwiseProduct(target.f2x);
  scratch.f2y = weight.f2y.cwiseProduct(target.f2y);
  Eigen::VectorXd rhs(n);
  apply_dt(g, scratch, rhs);

  // Diagonal of D^T W D, used as the Jacobi preconditioner.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const std::size_t cl = static_cast<std::size_t>(r) * w + (c + w - 1) % w;
      const std::size_t cr = static_cast<std::size_t>(r) * w + (c + 1) % w;
      diag[cl] += 0.25 * weight.c3x[i];
      diag[cr] += 0.25 * weight.c3x[i];
      diag[i] += weight.f2x[i];
      diag[cr] += weight.f2x[i];
      if (r > 0 && r < h - 1) {
        diag[i - w] += 0.25 * weight.c3y[i];
        diag[i + w] += 0.25 * weight.c3y[i];
      }
      if (r < h - 1) {
        diag[i] += weight.f2y[i];
        diag[i + w] += weight.f2y[i];
      }
    }
  }

  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    apply_d(g, v, scratch);
    scratch.c3x.array() *= weight.c3x.array();
    scratch.c3y.array() *= weight.c3y.array();
    scratch.f2x.array() *= weight.f2x.array();
    scratch.f2y.array() *= weight.f2y.array();
    apply_dt(g, scratch, out);
  };
  auto precondition = [&](const Eigen::VectorXd& r, Eigen::VectorXd& out) { out = r.cwiseQuotient(diag); };

  // Warm start: valid pixels at their input values, the rest at the valid mean.
  double valid_mean = 0.0;
  for (std::size_t s = 0; s < map.state_size(); ++s) valid_mean += map.state_value(s);
  valid_mean /= static_cast<double>(map.state_size());
  Eigen::VectorXd f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), valid_mean);
  for (std::size_t s = 0; s < map.state_size(); ++s) f[map.pixel_of_state(s)] = map.state_value(s);

  const long cap = options.max_iterations > 0 ? options.max_iterations : 10L * w * h;
  const CgReport cg = conjugate_gradient(apply, precondition, rhs, f, options.tolerance,
                                         static_cast<int>(std::min<long>(cap, 1L << 30)));
  if (!cg.converged) {
    throw Error(ErrorKind::kDensify, "densify: CG stopped at relative residual " +
                                         std::to_string(cg.relative_residual) + " after " +
                                         std::to_string(cg.iterations) + " iterations");
  }
  if (report) {
    report->iterations = cg.iterations;
    report->relative_residual = cg.relative_residual;
  }

  // Gauge: the mean over valid pixels matches the input.
  double output_mean = 0.0;
  for (std::size_t s = 0; s < map.state_size(); ++s) output_mean += f[map.pixel_of_state(s)];
  output_mean /= static_cast<double>(map.state_size());
  DenseMap out(g);
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i] + valid_mean - output_mean;
  return out;
}

}  // namespace rotpba

#pragma once

#include "rotpba/pano_map.hpp"
#include "rotpba/scene.hpp"

namespace rotpba {

struct DensifyOptions {
  double tolerance = 1e-8;  // CG relative residual
  long max_iterations = 0;  // 0 selects 10 * W * H
  double unsupported_weight = 0.01;  // weight of gradient rows whose support is not all valid
};

struct DensifyReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Gradient field of a semi-dense map under the 3-tap kernels (-0.5, 0, 0.5). An entry is
/// non-zero only where both outer taps fall on valid pixels; azimuth wraps, and the vertical
/// kernel is undefined on the first and last rows.
struct GradientField {
  DenseMap gx;
  DenseMap gy;
};
GradientField semi_dense_gradients(const PanoramaMap& map);

/// Poisson reconstruction of a dense map from the semi-dense map's gradients: weighted least
/// squares min |W^(1/2) (D F - G)|^2 where D stacks the 3-tap central differences and the 2-tap
/// forward differences (whose normal operator is the 5-point Laplacian). G holds the semi-dense
/// differences on rows whose taps are all valid (weight 1) and zero elsewhere (weight
/// `unsupported_weight`), so a consistent field is reproduced exactly and holes are filled
/// smoothly. Azimuth wraps; the poles are Neumann. CG is warm-started from the input and the
/// constant is fixed by matching the mean over valid pixels to the input. Throws
/// Error(kDensify) if CG stalls.
DenseMap densify(const PanoramaMap& map, const DensifyOptions& options = {},
                 DensifyReport* report = nullptr);

}  // namespace rotpba

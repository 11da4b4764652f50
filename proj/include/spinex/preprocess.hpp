#pragma once

#include "spinex/image.hpp"

#include <Eigen/Sparse>

namespace spinex {

/// Parameters of the WLS-based preprocessing chain.
struct PreprocessParams {
  double lambda_smooth = 0.8; ///< smoothing balance term
  double alpha = 1.8;         ///< gradient sensitivity exponent, sensible in [1.2, 2.0]
  double epsilon = 1e-4;      ///< numeric stability constant in the smoothness weights
  double divide_floor = 0.01; ///< lower guard on the divisor of the enhancement step

  void validate() const;
};

/// Affine rescale to [0, 1]. A constant image maps to all zeros.
Grid normalize_minmax(const Grid& img);

/// mean(img) - img. The result sums to zero.
Grid invert_about_mean(const Grid& img);

/// Assembles the sparse system (I + lambda*A), where A is the five-point
/// Laplacian weighted by the smoothness weights computed on the
/// log-luminance channel. Exposed so tests can inspect the matrix.
Eigen::SparseMatrix<double> wls_system(const Grid& img, const PreprocessParams& p);

/// Edge-preserving smoothing: solves (I + lambda*A) s = img.
/// Throws std::runtime_error if the factorization fails (the system is
/// symmetric positive definite by construction, so this signals bad input).
Grid wls_smooth(const Grid& img, const PreprocessParams& p);

/// Full enhancement: P = wls_smooth(img) + invert_about_mean(img),
/// E = img / max(P, divide_floor), re-normalized to [0, 1].
Grid compose_enhanced(const Grid& img, const PreprocessParams& p);

/// High-frequency residual img - wls_smooth(img); near-zero mean,
/// concentrated at edges. Used as the gradient-correlation target.
Grid details_layer(const Grid& img, const PreprocessParams& p);

} // namespace spinex

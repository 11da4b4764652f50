#pragma once

#include "spinex/image.hpp"

#include <array>
#include <span>
#include <vector>

namespace spinex {

/// Generalized Gaussian fit: shape gamma and variance sigma2.
struct GgdFit {
  double gamma = 2.0;
  double sigma2 = 1.0;
};

/// Asymmetric generalized Gaussian fit of a neighbor-product map.
struct AggdFit {
  double shape = 2.0;
  double mean = 0.0;
  double sigma2_left = 1.0;
  double sigma2_right = 1.0;
};

/// Mean-subtracted contrast-normalized coefficients. Input values in [0, 1]
/// are rescaled to [0, 255] internally; the local mean and deviation come
/// from a 7x7 circularly symmetric Gaussian window (reflected borders) and
/// the stabilizing constant in the denominator is 1.
Grid mscn(const Grid& img);

/// Moment-matching GGD fit: the shape is found by inverting
/// r(g) = Gamma(2/g)^2 / (Gamma(1/g) Gamma(3/g)) over a precomputed table
/// on [0.2, 10] with step 0.001; sigma2 is the sample second moment.
/// Throws std::invalid_argument for fewer than 100 samples or constant input.
GgdFit fit_ggd(std::span<const double> samples);

/// Moment-matching AGGD fit of pairwise products (BRISQUE neighbor features).
AggdFit fit_aggd(std::span<const double> samples);

/// The 36-entry BRISQUE feature vector: per scale (original and half
/// resolution), a GGD fit of the MSCN coefficients plus AGGD fits of the
/// four pairwise neighbor products (horizontal, vertical, both diagonals).
/// Requires an image of at least 32x32.
std::array<double, 36> brisque_features(const Grid& img);

} // namespace spinex

#pragma once

#include <span>
#include <vector>

namespace spinex {

struct WilcoxonResult {
  double w_plus = 0.0;  ///< sum of ranks of positive differences
  double p_value = 1.0; ///< two-sided
  int n_effective = 0;  ///< pairs remaining after dropping zero differences
  bool exact = false;   ///< exact distribution (n <= 25) vs normal approximation
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are
/// dropped and tied absolute differences receive averaged ranks. The
/// exact null distribution (enumeration over sign assignments) is used
/// for n <= 25; above that, a normal approximation with tie and
/// continuity corrections. All pairs identical yields p = 1.
/// Throws std::invalid_argument for mismatched lengths or n < 6.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Averaged ranks of |values|, 1-based. Exposed for the test oracles.
std::vector<double> average_ranks(std::span<const double> abs_values);

} // namespace spinex

#pragma once

#include "spinex/brisque.hpp"
#include "spinex/image.hpp"
#include "spinex/rng.hpp"

#include <string>
#include <vector>

namespace spinex {

/// Kernel regression model mapping BRISQUE feature vectors to a 0-100
/// quality score (lower is better). Loaded from a versioned JSON container
/// carrying the kernel type, support vectors with coefficients, and the
/// per-feature scaling ranges.
class RegressorModel {
 public:
  static RegressorModel load(const std::string& path);
  void save(const std::string& path) const;

  double predict(const std::array<double, 36>& features) const;

  /// Fits a radial-basis kernel ridge regressor. Rows of `x` are feature
  /// vectors, `y` the target scores.
  static RegressorModel fit_rbf(const std::vector<std::array<double, 36>>& x,
                                const std::vector<double>& y, double kernel_gamma,
                                double ridge);

  int n_support() const { return static_cast<int>(coeffs_.size()); }

 private:
  std::string kernel_ = "rbf";
  double gamma_ = 0.05;
  double bias_ = 0.0;
  std::vector<std::array<double, 36>> support_;
  std::vector<double> coeffs_;
  std::array<double, 36> feat_min_{};
  std::array<double, 36> feat_max_{};

  std::array<double, 36> scale(const std::array<double, 36>& f) const;
};

/// Resolves the regressor path: explicit argument if non-empty, else
/// $SPINE_ENHANCE_CACHE/brisque_model.json, else the bundled model.
std::string resolve_regressor_path(const std::string& explicit_path);

/// BRISQUE score in [0, 100]; lower indicates higher quality.
double brisque_score(const Grid& img, const RegressorModel& model);

} // namespace spinex

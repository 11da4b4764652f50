#include "spinex/losses.hpp"

#include "spinex/entropy.hpp"
#include "spinex/preprocess.hpp"

#include <stdexcept>

namespace spinex {

std::size_t select_max_entropy_index(const std::vector<const Grid*>& features) {
  if (features.empty()) {
    throw std::invalid_argument("select_max_entropy_feature: empty feature stack");
  }
  std::size_t best = 0;
  double best_entropy = -1.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double e = entropy(normalize_minmax(*features[i]));
    if (e > best_entropy) {
      best_entropy = e;
      best = i;
    }
  }
  return best;
}

Grid select_max_entropy_feature(const std::vector<Grid>& features) {
  std::vector<const Grid*> ptrs;
  ptrs.reserve(features.size());
  for (const auto& f : features) ptrs.push_back(&f);
  return normalize_minmax(features[select_max_entropy_index(ptrs)]);
}

double detail_enhancement_loss(const Grid& x_t, const Grid& f) {
  if (x_t.rows() != f.rows() || x_t.cols() != f.cols()) {
    throw std::invalid_argument("detail_enhancement_loss: shape mismatch");
  }
  return loss::mse<double>(x_t.data(), f.data(), static_cast<std::size_t>(x_t.size()), nullptr);
}

double ncc(const Grid& x, const Grid& y, bool* degenerate) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("ncc: shape mismatch");
  }
  return loss::ncc_core<double>(x.data(), y.data(), static_cast<std::size_t>(x.size()), nullptr,
                                degenerate);
}

double gradient_correlation(const Grid& x, const Grid& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("gradient_correlation: shape mismatch");
  }
  if (x.rows() < 3 || x.cols() < 3) {
    throw std::invalid_argument("gradient_correlation: images must be at least 3x3");
  }
  return loss::gradient_correlation_core<double>(x.data(), y.data(), grid_height(x), grid_width(x),
                                                 nullptr);
}

double gc_loss(const Grid& x_t, const Grid& y_detail) {
  return 1.0 - gradient_correlation(x_t, y_detail);
}

double total_loss(const Grid& x_t, const Grid& f, const Grid& y_detail, const LossWeights& w) {
  return w.lambda1 * detail_enhancement_loss(x_t, f) + w.lambda2 * gc_loss(x_t, y_detail);
}

} // namespace spinex

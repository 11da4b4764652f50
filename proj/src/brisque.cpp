#include "spinex/brisque.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinex {

namespace {

// 7x7 circularly symmetric Gaussian window (K = L = 3), unit sum.
const Grid& mscn_window() {
  static const Grid w = [] {
    constexpr int radius = 3;
    const double sigma = 7.0 / 6.0;
    Grid win(2 * radius + 1, 2 * radius + 1);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const double v = std::exp(-0.5 * (dy * dy + dx * dx) / (sigma * sigma));
        win(dy + radius, dx + radius) = v;
        sum += v;
      }
    }
    win /= sum;
    return win;
  }();
  return w;
}

// Moment ratio r(g) = Gamma(2/g)^2 / (Gamma(1/g) Gamma(3/g)), increasing in g.
struct GammaTable {
  std::vector<double> gamma, ratio;
  GammaTable() {
    for (double g = 0.2; g <= 10.0 + 1e-12; g += 0.001) {
      const double r = std::exp(2.0 * std::lgamma(2.0 / g) - std::lgamma(1.0 / g) -
                                std::lgamma(3.0 / g));
      gamma.push_back(g);
      ratio.push_back(r);
    }
  }
  double nearest(double r) const {
    // Monotone table: binary search, then pick the closer neighbor.
    auto it = std::lower_bound(ratio.begin(), ratio.end(), r);
    if (it == ratio.begin()) return gamma.front();
    if (it == ratio.end()) return gamma.back();
    const std::size_t hi = static_cast<std::size_t>(it - ratio.begin());
    return (r - ratio[hi - 1] <= ratio[hi] - r) ? gamma[hi - 1] : gamma[hi];
  }
};

const GammaTable& gamma_table() {
  static const GammaTable t;
  return t;
}

} // namespace

Grid mscn(const Grid& img) {
  const int h = grid_height(img), w = grid_width(img);
  const Grid scaled = img * 255.0;
  const Grid& win = mscn_window();
  constexpr int radius = 3;
  const Grid padded = reflect_pad(scaled, radius, radius, radius, radius);

  Grid mu(h, w), sigma(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double m = 0.0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          m += win(dy + radius, dx + radius) * padded(y + dy + radius, x + dx + radius);
      mu(y, x) = m;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const double d = padded(y + dy + radius, x + dx + radius) - mu(y, x);
          v += win(dy + radius, dx + radius) * d * d;
        }
      sigma(y, x) = std::sqrt(std::max(0.0, v));
    }
  }
  return (scaled - mu) / (sigma + 1.0);
}

GgdFit fit_ggd(std::span<const double> samples) {
  if (samples.size() < 100) throw std::invalid_argument("fit_ggd: need at least 100 samples");
  double sum_abs = 0.0, sum_sq = 0.0;
  bool constant = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sum_abs += std::abs(samples[i]);
    sum_sq += samples[i] * samples[i];
    if (samples[i] != samples[0]) constant = false;
  }
  if (constant || sum_sq == 0.0) throw std::invalid_argument("fit_ggd: degenerate (constant) samples");

  const double n = static_cast<double>(samples.size());
  const double e_abs = sum_abs / n;
  const double e_sq = sum_sq / n;
  const double r = (e_abs * e_abs) / e_sq;

  GgdFit fit;
  fit.gamma = gamma_table().nearest(r);
  fit.sigma2 = e_sq;
  return fit;
}

AggdFit fit_aggd(std::span<const double> samples) {
  if (samples.size() < 100) throw std::invalid_argument("fit_aggd: need at least 100 samples");
  double sq_left = 0.0, sq_right = 0.0, sum_abs = 0.0, sum_sq = 0.0;
  std::size_t n_left = 0, n_right = 0;
  for (const double v : samples) {
    if (v < 0.0) {
      sq_left += v * v;
      ++n_left;
    } else {
      sq_right += v * v;
      ++n_right;
    }
    sum_abs += std::abs(v);
    sum_sq += v * v;
  }
  if (n_left == 0 || n_right == 0 || sq_left == 0.0 || sq_right == 0.0) {
    throw std::invalid_argument("fit_aggd: degenerate samples (one-sided or constant)");
  }

  const double sigma_l = std::sqrt(sq_left / static_cast<double>(n_left));
  const double sigma_r = std::sqrt(sq_right / static_cast<double>(n_right));
  const double gamma_hat = sigma_l / sigma_r;
  const double n = static_cast<double>(samples.size());
  const double r_hat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);
  const double g2 = gamma_hat * gamma_hat;
  const double r_norm = r_hat * (g2 * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                        ((g2 + 1.0) * (g2 + 1.0));

  AggdFit fit;
  fit.shape = gamma_table().nearest(r_norm);
  fit.sigma2_left = sigma_l * sigma_l;
  fit.sigma2_right = sigma_r * sigma_r;
  const double ratio = std::exp(std::lgamma(2.0 / fit.shape) - std::lgamma(1.0 / fit.shape));
  const double konst = std::sqrt(std::exp(std::lgamma(1.0 / fit.shape) - std::lgamma(3.0 / fit.shape)));
  fit.mean = (sigma_r - sigma_l) * konst * ratio;
  return fit;
}

std::array<double, 36> brisque_features(const Grid& img) {
  if (img.rows() < 32 || img.cols() < 32) {
    throw std::invalid_argument("brisque_features: image must be at least 32x32");
  }

  std::array<double, 36> feats{};
  std::size_t k = 0;
  Grid scale_img = img;
  for (int scale = 0; scale < 2; ++scale) {
    const Grid coeffs = mscn(scale_img);
    std::vector<double> flat(coeffs.data(), coeffs.data() + coeffs.size());
    const GgdFit g = fit_ggd(flat);
    feats[k++] = g.gamma;
    feats[k++] = g.sigma2;

    // Pairwise products over the in-bounds overlap, no wrap-around.
    const int h = grid_height(coeffs), w = grid_width(coeffs);
    const std::array<std::pair<int, int>, 4> shifts{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
    for (const auto& [dy, dx] : shifts) {
      std::vector<double> prod;
      prod.reserve(static_cast<std::size_t>(h) * w);
      for (int y = 0; y < h; ++y) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          prod.push_back(coeffs(y, x) * coeffs(yy, xx));
        }
      }
      const AggdFit a = fit_aggd(prod);
      feats[k++] = a.shape;
      feats[k++] = a.mean;
      feats[k++] = a.sigma2_left;
      feats[k++] = a.sigma2_right;
    }
    if (scale == 0) scale_img = box_downsample2(scale_img);
  }
  return feats;
}

} // namespace spinex

#include "spinex/entropy.hpp"

#include <cmath>

namespace spinex {

std::array<double, kEntropyBins> gray_histogram(const Grid& img) {
  std::array<double, kEntropyBins> hist{};
  const double n = static_cast<double>(img.size());
  for (int y = 0; y < img.rows(); ++y) {
    for (int x = 0; x < img.cols(); ++x) {
      int bin = static_cast<int>(img(y, x) * kEntropyBins);
      bin = std::min(kEntropyBins - 1, std::max(0, bin));
      hist[bin] += 1.0;
    }
  }
  for (double& q : hist) q /= n;
  return hist;
}

double entropy(const Grid& img) {
  const auto hist = gray_histogram(img);
  double e = 0.0;
  for (const double q : hist) {
    if (q > 0.0) e -= q * std::log2(q);
  }
  return e;
}

} // namespace spinex

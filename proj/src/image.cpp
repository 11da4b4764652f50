#include "spinex/image.hpp"

#include <cmath>
#include <vector>

namespace spinex {

bool all_finite(const Grid& g) {
  return g.isFinite().all();
}

void require_valid_stage_input(const Grid& g, const char* op) {
  if (g.rows() < 8 || g.cols() < 8) {
    throw std::invalid_argument(std::string(op) + ": image must be at least 8x8, got " +
                                std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
  }
  if (!all_finite(g)) {
    throw std::invalid_argument(std::string(op) + ": image contains non-finite values");
  }
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

Grid reflect_pad(const Grid& g, int top, int bottom, int left, int right) {
  const int h = grid_height(g), w = grid_width(g);
  Grid out(h + top + bottom, w + left + right);
  for (int y = 0; y < out.rows(); ++y) {
    const int sy = reflect_index(y - top, h);
    for (int x = 0; x < out.cols(); ++x) {
      out(y, x) = g(sy, reflect_index(x - left, w));
    }
  }
  return out;
}

Grid gaussian_blur(const Grid& g, double sigma) {
  if (sigma <= 0.0) return g;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  const int h = grid_height(g), w = grid_width(g);
  Grid tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * g(y, reflect_index(x + i, w));
      tmp(y, x) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(reflect_index(y + i, h), x);
      out(y, x) = acc;
    }
  }
  return out;
}

Grid box_downsample2(const Grid& g) {
  const int h = grid_height(g) / 2, w = grid_width(g) / 2;
  Grid out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(y, x) = 0.25 * (g(2 * y, 2 * x) + g(2 * y, 2 * x + 1) +
                          g(2 * y + 1, 2 * x) + g(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Grid clamp01(const Grid& g) {
  return g.cwiseMax(0.0).cwiseMin(1.0);
}

double total_variation(const Grid& g) {
  double tv = 0.0;
  for (int y = 0; y < g.rows(); ++y)
    for (int x = 0; x + 1 < g.cols(); ++x) tv += std::abs(g(y, x + 1) - g(y, x));
  for (int y = 0; y + 1 < g.rows(); ++y)
    for (int x = 0; x < g.cols(); ++x) tv += std::abs(g(y + 1, x) - g(y, x));
  return tv;
}

} // namespace spinex

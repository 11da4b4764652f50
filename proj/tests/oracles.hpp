#pragma once

// Independent reference implementations used as test oracles. These
// deliberately avoid the library's own code paths: dense matrices instead
// of sparse solves, plain double loops instead of vectorized kernels.

#include "spinex/image.hpp"
#include "spinex/preprocess.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using spinex::Grid;

/// Dense assembly of (I + lambda*A) from the smoothness-weight definition.
inline Eigen::MatrixXd dense_wls_matrix(const Grid& img, const spinex::PreprocessParams& p) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  const int n = h * w;
  Eigen::MatrixXd logl(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) logl(y, x) = std::log(img(y, x) + p.epsilon);

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  auto idx = [w](int y, int x) { return y * w + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double g = std::abs(logl(y, x + 1) - logl(y, x));
        const double wt = p.lambda_smooth / (std::pow(g, p.alpha) + p.epsilon);
        m(idx(y, x), idx(y, x)) += wt;
        m(idx(y, x + 1), idx(y, x + 1)) += wt;
        m(idx(y, x), idx(y, x + 1)) -= wt;
        m(idx(y, x + 1), idx(y, x)) -= wt;
      }
      if (y + 1 < h) {
        const double g = std::abs(logl(y + 1, x) - logl(y, x));
        const double wt = p.lambda_smooth / (std::pow(g, p.alpha) + p.epsilon);
        m(idx(y, x), idx(y, x)) += wt;
        m(idx(y + 1, x), idx(y + 1, x)) += wt;
        m(idx(y, x), idx(y + 1, x)) -= wt;
        m(idx(y + 1, x), idx(y, x)) -= wt;
      }
    }
  }
  return m;
}

/// Direct dense solve of the WLS system.
inline Grid dense_wls_solve(const Grid& img, const spinex::PreprocessParams& p) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  const Eigen::MatrixXd m = dense_wls_matrix(img, p);
  Eigen::VectorXd rhs(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) rhs(y * w + x) = img(y, x);
  const Eigen::VectorXd s = m.ldlt().solve(rhs);
  Grid out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = s(y * w + x);
  return out;
}

/// Stepwise transcription of the whole preprocessing chain on a normalized
/// image: inversion, dense WLS, composition, guarded division, re-normalize.
inline Grid stepwise_enhanced(const Grid& img, const spinex::PreprocessParams& p) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  double mean = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mean += img(y, x);
  mean /= h * w;

  const Grid smooth = dense_wls_solve(img, p);
  Grid e(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double inv = mean - img(y, x);
      const double divisor = std::max(smooth(y, x) + inv, p.divide_floor);
      e(y, x) = img(y, x) / divisor;
    }
  }
  double lo = e(0, 0), hi = e(0, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      lo = std::min(lo, e(y, x));
      hi = std::max(hi, e(y, x));
    }
  Grid out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = hi > lo ? (e(y, x) - lo) / (hi - lo) : 0.0;
  return out;
}

/// Plain double-loop Pearson correlation.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double suv = 0, suu = 0, svv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    suv += (a[i] - ma) * (b[i] - mb);
    suu += (a[i] - ma) * (a[i] - ma);
    svv += (b[i] - mb) * (b[i] - mb);
  }
  if (suu <= 0 || svv <= 0) return 0.0;
  return suv / (std::sqrt(suu) * std::sqrt(svv));
}

/// Valid-region Sobel responses as flat vectors (row-major).
inline std::vector<double> sobel_response(const Grid& g, bool horizontal) {
  const int h = static_cast<int>(g.rows()), w = static_cast<int>(g.cols());
  const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(h - 2) * (w - 2));
  for (int y = 0; y + 2 < h; ++y) {
    for (int x = 0; x + 2 < w; ++x) {
      double acc = 0;
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx)
          acc += (horizontal ? kx : ky)[dy][dx] * g(y + dy, x + dx);
      out.push_back(acc);
    }
  }
  return out;
}

/// Stepwise gradient correlation: Sobel, Pearson per axis, average.
inline double gradient_correlation(const Grid& x, const Grid& y) {
  const double cx = pearson(sobel_response(x, true), sobel_response(y, true));
  const double cy = pearson(sobel_response(x, false), sobel_response(y, false));
  return 0.5 * (cx + cy);
}

} // namespace oracle

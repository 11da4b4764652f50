#include "spinex/preprocess.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace spinex {

void PreprocessParams::validate() const {
  if (!(lambda_smooth >= 0.0)) throw std::invalid_argument("lambda_smooth must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(divide_floor > 0.0)) throw std::invalid_argument("divide_floor must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
}

Grid normalize_minmax(const Grid& img) {
  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  if (hi == lo) return Grid::Zero(img.rows(), img.cols());
  return (img - lo) / (hi - lo);
}

Grid invert_about_mean(const Grid& img) {
  return img.mean() - img;
}

Eigen::SparseMatrix<double> wls_system(const Grid& img, const PreprocessParams& p) {
  p.validate();
  const int h = grid_height(img), w = grid_width(img);
  const int n = h * w;
  const auto idx = [w](int y, int x) { return y * w + x; };

  // Smoothness weights from the log-luminance channel, forward differences.
  const Grid logl = (img + p.epsilon).log();
  const auto weight = [&](double grad) {
    return 1.0 / (std::pow(std::abs(grad), p.alpha) + p.epsilon);
  };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  std::vector<double> diag(n, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double wgt = p.lambda_smooth * weight(logl(y, x + 1) - logl(y, x));
        trip.emplace_back(idx(y, x), idx(y, x + 1), -wgt);
        trip.emplace_back(idx(y, x + 1), idx(y, x), -wgt);
        diag[idx(y, x)] += wgt;
        diag[idx(y, x + 1)] += wgt;
      }
      if (y + 1 < h) {
        const double wgt = p.lambda_smooth * weight(logl(y + 1, x) - logl(y, x));
        trip.emplace_back(idx(y, x), idx(y + 1, x), -wgt);
        trip.emplace_back(idx(y + 1, x), idx(y, x), -wgt);
        diag[idx(y, x)] += wgt;
        diag[idx(y + 1, x)] += wgt;
      }
    }
  }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, diag[i]);

  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Grid wls_smooth(const Grid& img, const PreprocessParams& p) {
  require_valid_stage_input(img, "wls_smooth");
  if (p.lambda_smooth == 0.0) return img; // system degenerates to the identity

  const Eigen::SparseMatrix<double> m = wls_system(img, p);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("wls_smooth: sparse factorization failed");
  }

  const int h = grid_height(img), w = grid_width(img);
  Eigen::VectorXd rhs(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) rhs(y * w + x) = img(y, x);

  const Eigen::VectorXd s = solver.solve(rhs);
  const double residual = (m * s - rhs).norm();
  if (solver.info() != Eigen::Success || !std::isfinite(residual) || residual > 1e-6 * std::max(1.0, rhs.norm())) {
    throw std::runtime_error("wls_smooth: solve failed, residual norm " + std::to_string(residual));
  }

  Grid out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = s(y * w + x);
  return out;
}

Grid compose_enhanced(const Grid& img, const PreprocessParams& p) {
  require_valid_stage_input(img, "compose_enhanced");
  const Grid smoothed = wls_smooth(img, p);
  const Grid inverted = invert_about_mean(img);
  const Grid divisor = (smoothed + inverted).cwiseMax(p.divide_floor);
  const Grid enhanced = img / divisor;
  return normalize_minmax(enhanced);
}

Grid details_layer(const Grid& img, const PreprocessParams& p) {
  require_valid_stage_input(img, "details_layer");
  return img - wls_smooth(img, p);
}

} // namespace spinex

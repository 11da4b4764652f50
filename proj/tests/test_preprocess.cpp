#include "spinex/preprocess.hpp"

#include "spinex/entropy.hpp"
#include "spinex/rng.hpp"
#include "spinex/synth.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace spinex;

namespace {

Grid step_image(int h, int w) {
  Grid g(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g(y, x) = x < w / 2 ? 0.2 : 0.8;
  return g;
}

// Vertical ridge with bumps, loosely shaped like a vertebra column.
Grid ridge_image(int h, int w) {
  Grid g(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = std::abs(x - w / 2.0) / (w / 4.0);
      const double ridge = std::max(0.0, 1.0 - d);
      const double bump = 0.15 * std::sin(2.0 * M_PI * y / 5.0);
      g(y, x) = std::min(1.0, std::max(0.0, 0.3 + 0.5 * ridge + bump * ridge));
    }
  }
  return g;
}

} // namespace

TEST_CASE("normalize_minmax basics") {
  Grid g(2, 2);
  g << 2, 4, 6, 10;
  const Grid n = normalize_minmax(g);
  CHECK(n(0, 0) == doctest::Approx(0.0));
  CHECK(n(0, 1) == doctest::Approx(0.25));
  CHECK(n(1, 0) == doctest::Approx(0.5));
  CHECK(n(1, 1) == doctest::Approx(1.0));

  const Grid c = normalize_minmax(Grid::Constant(4, 4, 7.0));
  CHECK(c.abs().maxCoeff() == 0.0);

  Grid already(2, 2);
  already << 0.0, 0.3, 0.7, 1.0;
  CHECK(((normalize_minmax(already) - already).abs().maxCoeff()) == 0.0);
}

TEST_CASE("invert_about_mean basics") {
  Grid g(1, 2);
  g << 1, 3;
  const Grid inv = invert_about_mean(g);
  CHECK(inv(0, 0) == doctest::Approx(1.0));
  CHECK(inv(0, 1) == doctest::Approx(-1.0));

  CHECK(invert_about_mean(Grid::Constant(3, 3, 0.4)).abs().maxCoeff() == doctest::Approx(0.0));

  Rng rng(7);
  Grid r(9, 11);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 11; ++x) r(y, x) = rng.uniform();
  CHECK(std::abs(invert_about_mean(r).sum()) < 1e-9);

  // Involution on a mean-centered grid.
  const Grid centered = r - r.mean();
  const Grid twice = invert_about_mean(invert_about_mean(centered));
  CHECK((twice - centered).abs().maxCoeff() < 1e-12);
}

TEST_CASE("wls_smooth identity cases") {
  PreprocessParams p;
  p.lambda_smooth = 0.0;
  const Grid img = step_image(8, 8);
  const Grid out = wls_smooth(img, p);
  CHECK((out - img).abs().maxCoeff() == 0.0);

  PreprocessParams q; // defaults, lambda 0.8
  const Grid c = Grid::Constant(8, 8, 0.37);
  CHECK((wls_smooth(c, q) - c).abs().maxCoeff() < 1e-9);
}

TEST_CASE("wls_smooth matches the dense direct-solve oracle") {
  PreprocessParams p; // lambda 0.8, alpha 1.8
  const Grid img = step_image(16, 16);
  const Grid sparse = wls_smooth(img, p);
  const Grid dense = oracle::dense_wls_solve(img, p);
  CHECK((sparse - dense).abs().maxCoeff() < 1e-6);
}

TEST_CASE("wls system is symmetric and strictly diagonally dominant") {
  PreprocessParams p;
  Rng rng(3);
  Grid img(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img(y, x) = rng.uniform();

  const Eigen::SparseMatrix<double> m = wls_system(img, p);
  const Eigen::MatrixXd d = Eigen::MatrixXd(m);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < d.rows(); ++i) {
    double off = 0.0;
    for (int j = 0; j < d.cols(); ++j) {
      if (j != i) off += std::abs(d(i, j));
    }
    CHECK(d(i, i) > off); // the identity contributes strict dominance
  }
}

TEST_CASE("wls_smooth does not increase total variation") {
  PreprocessParams p;
  Rng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const Grid img = make_texture(rng, 24, 24);
    CHECK(total_variation(wls_smooth(img, p)) <= total_variation(img) + 1e-9);
  }
}

TEST_CASE("details_layer basics and reconstruction") {
  PreprocessParams p;
  CHECK(details_layer(Grid::Constant(8, 8, 0.6), p).abs().maxCoeff() < 1e-9);

  PreprocessParams zero = p;
  zero.lambda_smooth = 0.0;
  CHECK(details_layer(step_image(8, 8), zero).abs().maxCoeff() == 0.0);

  const Grid img = step_image(16, 16);
  const Grid detail = details_layer(img, p);
  const Grid smooth = wls_smooth(img, p);
  CHECK((detail + smooth - img).abs().maxCoeff() < 1e-9);

  // Residual energy concentrates in a band around the step.
  const Grid dense_detail = img - oracle::dense_wls_solve(img, p);
  CHECK((detail - dense_detail).abs().maxCoeff() < 1e-6);
  double inside = 0.0, outside = 0.0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (std::abs(x - 8) <= 2) {
        inside += std::abs(detail(y, x));
      } else {
        outside += std::abs(detail(y, x));
      }
    }
  }
  CHECK(inside > outside);
}

TEST_CASE("compose_enhanced constant image collapses to zero") {
  PreprocessParams p;
  const Grid out = compose_enhanced(Grid::Constant(12, 12, 0.5), p);
  CHECK(out.abs().maxCoeff() == 0.0);
}

TEST_CASE("compose_enhanced matches stepwise transcription oracle") {
  PreprocessParams p;
  const Grid img = ridge_image(16, 16);
  const Grid got = compose_enhanced(img, p);
  const Grid want = oracle::stepwise_enhanced(img, p);
  CHECK((got - want).abs().maxCoeff() < 1e-9);
  CHECK(all_finite(got));
  CHECK(got.minCoeff() >= 0.0);
  CHECK(got.maxCoeff() <= 1.0);
}

TEST_CASE("compose_enhanced raises entropy on most low-contrast images") {
  PreprocessParams p;
  Rng rng(2024);
  int improved = 0;
  const int total = 20;
  for (int i = 0; i < total; ++i) {
    const Grid img = make_low_contrast(rng, 64, 64);
    if (entropy(compose_enhanced(img, p)) >= entropy(img)) ++improved;
  }
  CHECK(improved >= 16); // >= 80%
}

TEST_CASE("stage input validation") {
  PreprocessParams p;
  CHECK_THROWS_AS(wls_smooth(Grid::Constant(4, 4, 0.5), p), std::invalid_argument);
  Grid bad = Grid::Constant(8, 8, 0.5);
  bad(3, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(compose_enhanced(bad, p), std::invalid_argument);
}

#include "spinex/synth.hpp"

#include "spinex/preprocess.hpp"

#include <cmath>
#include <vector>

namespace spinex {

namespace {

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::min(1.0, std::max(0.0, (x - edge0) / (edge1 - edge0)));
  return t * t * (3.0 - 2.0 * t);
}

// Soft-edged ellipse membership in [0, 1].
double ellipse(double y, double x, double cy, double cx, double ry, double rx, double softness) {
  const double d = std::hypot((y - cy) / ry, (x - cx) / rx);
  return 1.0 - smoothstep(1.0 - softness, 1.0 + softness, d);
}

} // namespace

Grid make_radiograph(Rng& rng, int height, int width) {
  Grid img = Grid::Zero(height, width);
  const double h = height, w = width;

  const double cx = w * rng.uniform(0.47, 0.53);
  const double thorax_ry = h * rng.uniform(0.52, 0.6);
  const double thorax_rx = w * rng.uniform(0.38, 0.44);
  const double spine_cx = cx + w * rng.uniform(-0.015, 0.015);
  const double spine_half_w = w * rng.uniform(0.035, 0.05);
  const double curve = rng.uniform(-0.01, 0.01) * w;

  const double vert_period = h * rng.uniform(0.055, 0.075);
  const double gap_frac = rng.uniform(0.18, 0.26);
  const double vert_contrast = rng.uniform(0.025, 0.05); // deliberately faint
  const double phase = rng.uniform(0.0, vert_period);

  const int n_ribs = 7 + static_cast<int>(rng.below(3));
  std::vector<double> rib_y(n_ribs), rib_amp(n_ribs);
  for (int r = 0; r < n_ribs; ++r) {
    rib_y[r] = h * (0.12 + 0.7 * r / n_ribs) + rng.uniform(-0.01, 0.01) * h;
    rib_amp[r] = rng.uniform(0.025, 0.05);
  }
  const double rib_sag = h * rng.uniform(0.08, 0.14);
  const double rib_halfw = h * rng.uniform(0.006, 0.01);

  const double heart_cy = h * rng.uniform(0.58, 0.66);
  const double heart_cx = cx - w * rng.uniform(0.05, 0.1);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.04; // air

      const double body = ellipse(y, x, h * 0.52, cx, thorax_ry, thorax_rx, 0.08);
      v += 0.5 * body;

      // Lungs darken the thorax on both sides of the mediastinum.
      const double lung_l = ellipse(y, x, h * 0.44, cx - w * 0.2, h * 0.3, w * 0.16, 0.15);
      const double lung_r = ellipse(y, x, h * 0.44, cx + w * 0.2, h * 0.3, w * 0.16, 0.15);
      v -= 0.22 * (lung_l + lung_r) * body;

      // Heart shadow.
      v += 0.1 * ellipse(y, x, heart_cy, heart_cx, h * 0.18, w * 0.14, 0.2) * body;

      // Spine: a brighter midline column with faint vertebra/disc alternation.
      const double col_x = spine_cx + curve * std::sin(2.5 * y / h);
      const double in_col = 1.0 - smoothstep(spine_half_w * 0.8, spine_half_w * 1.2,
                                             std::abs(x - col_x));
      if (in_col > 0.0 && body > 0.1) {
        v += 0.13 * in_col;
        const double cycle = std::fmod(y + phase, vert_period) / vert_period;
        const double vert = cycle < (1.0 - gap_frac) ? 1.0 : -1.0;
        v += vert_contrast * vert * in_col;
      }

      // Ribs: shallow arcs across the lung fields.
      const double lateral = (x - cx) / thorax_rx;
      if (std::abs(lateral) < 1.05 && body > 0.1) {
        for (int r = 0; r < n_ribs; ++r) {
          const double arc_y = rib_y[r] + rib_sag * lateral * lateral;
          const double d = std::abs(y - arc_y);
          if (d < 3.0 * rib_halfw) {
            v += rib_amp[r] * std::exp(-0.5 * d * d / (rib_halfw * rib_halfw)) *
                 std::min(1.0, std::abs(lateral) * 3.0);
          }
        }
      }

      img(y, x) = v;
    }
  }

  img = gaussian_blur(img, rng.uniform(1.2, 2.2)); // limited acquisition resolution
  img = add_noise(img, rng.uniform(0.004, 0.01), rng);
  img = compress_contrast(img, rng.uniform(0.55, 0.75));
  return clamp01(img);
}

Grid make_texture(Rng& rng, int height, int width) {
  Grid img(height, width);

  // Multi-scale smoothed noise as the base.
  Grid noise(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) noise(y, x) = rng.gaussian();
  img = 0.45 * gaussian_blur(noise, 8.0) * 8.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) noise(y, x) = rng.gaussian();
  img += 0.25 * gaussian_blur(noise, 2.0) * 2.0;

  // Sharp structures: random blobs and bars.
  const int n_shapes = 6 + static_cast<int>(rng.below(6));
  for (int s = 0; s < n_shapes; ++s) {
    const double cy = rng.uniform(0.1, 0.9) * height;
    const double cx = rng.uniform(0.1, 0.9) * width;
    const double ry = rng.uniform(0.03, 0.15) * height;
    const double rx = rng.uniform(0.03, 0.15) * width;
    const double amp = rng.uniform(-0.5, 0.5);
    for (int y = std::max(0, (int)(cy - 2 * ry)); y < std::min(height, (int)(cy + 2 * ry)); ++y) {
      for (int x = std::max(0, (int)(cx - 2 * rx)); x < std::min(width, (int)(cx + 2 * rx)); ++x) {
        img(y, x) += amp * ellipse(y, x, cy, cx, ry, rx, 0.05);
      }
    }
  }
  return normalize_minmax(img);
}

Grid make_low_contrast(Rng& rng, int height, int width) {
  const Grid base = make_texture(rng, height, width);
  const double center = rng.uniform(0.4, 0.6);
  const double span = rng.uniform(0.08, 0.2);
  Grid out = center + span * (base - 0.5);
  return clamp01(out);
}

Grid add_noise(const Grid& img, double sigma, Rng& rng) {
  Grid out = img;
  for (int y = 0; y < out.rows(); ++y)
    for (int x = 0; x < out.cols(); ++x) out(y, x) += sigma * rng.gaussian();
  return clamp01(out);
}

Grid compress_contrast(const Grid& img, double factor) {
  return 0.5 + factor * (img - 0.5);
}

} // namespace spinex

#pragma once

#include "spinex/image.hpp"
#include "spinex/tensor.hpp"

#include <cmath>
#include <vector>

namespace spinex {

/// Scaling of the two loss terms: lambda1 on the detail-enhancement loss,
/// lambda2 on the gradient-correlation loss.
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 0.001;
};

// ---------------------------------------------------------------------------
// Templated value + gradient kernels shared by the double-precision metric
// path and the float training path. Gradient pointers may be null; when
// present the gradient is accumulated into them.

namespace loss {

inline constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr double kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

/// Mean squared difference (detail-enhancement loss).
template <class S>
S mse(const S* x, const S* f, std::size_t n, S* gx) {
  S acc = 0;
  const S scale = S(2) / static_cast<S>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const S d = x[i] - f[i];
    acc += d * d;
    if (gx) gx[i] += scale * d;
  }
  return acc / static_cast<S>(n);
}

/// Product-form normalized cross-correlation with optional gradient with
/// respect to x. Either input constant yields 0 (flagged degenerate) with a
/// zero gradient.
template <class S>
S ncc_core(const S* x, const S* y, std::size_t n, S* gx, bool* degenerate) {
  S mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<S>(n);
  my /= static_cast<S>(n);

  S suv = 0, suu = 0, svv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const S u = x[i] - mx, v = y[i] - my;
    suv += u * v;
    suu += u * u;
    svv += v * v;
  }
  if (degenerate) *degenerate = false;
  if (suu <= S(0) || svv <= S(0)) {
    if (degenerate) *degenerate = true;
    return S(0);
  }
  const S denom = std::sqrt(suu * svv);
  const S r = suv / denom;
  if (gx) {
    const S a = S(1) / denom;
    const S b = suv / (suu * denom);
    for (std::size_t i = 0; i < n; ++i) {
      gx[i] += a * (y[i] - my) - b * (x[i] - mx);
    }
  }
  return r;
}

/// Valid-region Sobel response; out has shape (h-2) x (w-2).
template <class S>
void sobel_valid(const S* img, int h, int w, const double k[3][3], std::vector<S>& out) {
  const int ho = h - 2, wo = w - 2;
  out.assign(static_cast<std::size_t>(ho) * wo, S(0));
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      S acc = 0;
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx)
          acc += static_cast<S>(k[dy][dx]) * img[(y + dy) * w + (x + dx)];
      out[static_cast<std::size_t>(y) * wo + x] = acc;
    }
  }
}

/// Adjoint of sobel_valid: scatters a gradient on the response back to the image.
template <class S>
void sobel_valid_adjoint(const S* gresp, int h, int w, const double k[3][3], S* gimg) {
  const int ho = h - 2, wo = w - 2;
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      const S g = gresp[static_cast<std::size_t>(y) * wo + x];
      if (g == S(0)) continue;
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx)
          gimg[(y + dy) * w + (x + dx)] += static_cast<S>(k[dy][dx]) * g;
    }
  }
}

/// Gradient correlation: mean NCC of the horizontal and vertical Sobel
/// responses. Flat responses contribute 0 through the NCC convention.
template <class S>
S gradient_correlation_core(const S* x, const S* y, int h, int w, S* gx) {
  std::vector<S> rx, ry, grad_resp;
  S total = 0;
  for (const auto* kernel : {&kSobelX, &kSobelY}) {
    sobel_valid(x, h, w, *kernel, rx);
    sobel_valid(y, h, w, *kernel, ry);
    if (gx) {
      grad_resp.assign(rx.size(), S(0));
      total += ncc_core(rx.data(), ry.data(), rx.size(), grad_resp.data(), nullptr);
      // d/dx of 0.5 * ncc term: scale the response gradient before scattering.
      for (auto& g : grad_resp) g *= S(0.5);
      sobel_valid_adjoint(grad_resp.data(), h, w, *kernel, gx);
    } else {
      total += ncc_core(rx.data(), ry.data(), rx.size(), static_cast<S*>(nullptr), nullptr);
    }
  }
  return S(0.5) * total;
}

} // namespace loss

// ---------------------------------------------------------------------------
// Contract-facing double-precision operations on image grids.

/// Min-max normalizes every map, quantizes to 256 bins for histogramming and
/// returns the (normalized, unquantized) map with the highest Shannon
/// entropy; ties break to the lowest index. Throws on an empty stack.
Grid select_max_entropy_feature(const std::vector<Grid>& features);

/// Index-returning variant used where the caller owns the storage.
std::size_t select_max_entropy_index(const std::vector<const Grid*>& features);

double detail_enhancement_loss(const Grid& x_t, const Grid& f);

/// Pearson product-form NCC in [-1, 1]; constant input yields 0 and sets
/// *degenerate when provided.
double ncc(const Grid& x, const Grid& y, bool* degenerate = nullptr);

/// Mean of the NCCs of horizontal and vertical Sobel gradients.
double gradient_correlation(const Grid& x, const Grid& y);

/// 1 - gradient_correlation, in [0, 2].
double gc_loss(const Grid& x_t, const Grid& y_detail);

double total_loss(const Grid& x_t, const Grid& f, const Grid& y_detail, const LossWeights& w);

// ---------------------------------------------------------------------------
// Training-side composite: value, per-term values, and gradient w.r.t. x.

template <class S>
struct LossBreakdown {
  S total = 0, del = 0, gcl = 0;
};

template <class S>
LossBreakdown<S> total_loss_with_grad(const Tensor<S>& x, const Tensor<S>& f,
                                      const Tensor<S>& y_detail, const LossWeights& w,
                                      Tensor<S>* gx) {
  if (!x.same_shape(f) || !x.same_shape(y_detail)) {
    throw std::invalid_argument("total_loss: shape mismatch");
  }
  LossBreakdown<S> out;
  const std::size_t n = x.size();

  std::vector<S> gdel, ggc;
  if (gx) {
    gdel.assign(n, S(0));
    ggc.assign(n, S(0));
  }
  out.del = loss::mse(x.data(), f.data(), n, gx ? gdel.data() : nullptr);
  const S gc = loss::gradient_correlation_core(x.data(), y_detail.data(), x.h, x.w,
                                               gx ? ggc.data() : nullptr);
  out.gcl = S(1) - gc;
  out.total = static_cast<S>(w.lambda1) * out.del + static_cast<S>(w.lambda2) * out.gcl;
  if (gx) {
    *gx = Tensor<S>(x.c, x.h, x.w);
    for (std::size_t i = 0; i < n; ++i) {
      gx->v[i] = static_cast<S>(w.lambda1) * gdel[i] - static_cast<S>(w.lambda2) * ggc[i];
    }
  }
  return out;
}

} // namespace spinex

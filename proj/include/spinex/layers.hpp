#pragma once

#include "spinex/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

// Building blocks of the enhancement network. Every forward writes what its
// backward needs into a small context object, so a network instance can be
// shared by concurrent callers as long as each caller owns its contexts.
namespace spinex::nn {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapMat = Eigen::Map<MatX<S>>;
template <class S>
using CMapMat = Eigen::Map<const MatX<S>>;

inline constexpr double kNormEps = 1e-5;

// ---------------------------------------------------------------------------
// Convolution, stride 1, reflected borders, square kernel.

template <class S>
struct ConvCtx {
  MatX<S> cols; // im2col matrix (cin*k*k) x (h*w)
  int hin = 0, win = 0;
};

template <class S>
Tensor<S> conv2d(const Tensor<S>& x, const S* w, const S* b, int cout, int k, ConvCtx<S>& ctx) {
  const int cin = x.c, h = x.h, wd = x.w, p = k / 2;
  const std::size_t n = static_cast<std::size_t>(h) * wd;
  ctx.hin = h;
  ctx.win = wd;
  ctx.cols.resize(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(n));

  for (int ci = 0; ci < cin; ++ci) {
    const S* src = x.channel(ci);
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        S* row = ctx.cols.data() + static_cast<std::size_t>((ci * k + dy) * k + dx) * n;
        for (int y = 0; y < h; ++y) {
          const int sy = reflect_index(y + dy - p, h);
          const S* srow = src + static_cast<std::size_t>(sy) * wd;
          for (int xx = 0; xx < wd; ++xx) {
            row[static_cast<std::size_t>(y) * wd + xx] = srow[reflect_index(xx + dx - p, wd)];
          }
        }
      }
    }
  }

  Tensor<S> out(cout, h, wd);
  CMapMat<S> wm(w, cout, static_cast<Eigen::Index>(cin) * k * k);
  MapMat<S> om(out.data(), cout, static_cast<Eigen::Index>(n));
  om.noalias() = wm * ctx.cols;
  for (int co = 0; co < cout; ++co) om.row(co).array() += b[co];
  return out;
}

template <class S>
Tensor<S> conv2d_backward(const Tensor<S>& gy, const S* w, int cin, int k, const ConvCtx<S>& ctx,
                          S* gw, S* gb) {
  const int cout = gy.c, h = ctx.hin, wd = ctx.win, p = k / 2;
  const std::size_t n = static_cast<std::size_t>(h) * wd;

  CMapMat<S> gym(gy.data(), cout, static_cast<Eigen::Index>(n));
  MapMat<S> gwm(gw, cout, static_cast<Eigen::Index>(cin) * k * k);
  gwm.noalias() += gym * ctx.cols.transpose();
  for (int co = 0; co < cout; ++co) gb[co] += gym.row(co).sum();

  CMapMat<S> wm(w, cout, static_cast<Eigen::Index>(cin) * k * k);
  MatX<S> gcols = wm.transpose() * gym;

  Tensor<S> gx(cin, h, wd);
  for (int ci = 0; ci < cin; ++ci) {
    S* dst = gx.channel(ci);
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        const S* row = gcols.data() + static_cast<std::size_t>((ci * k + dy) * k + dx) * n;
        for (int y = 0; y < h; ++y) {
          const int sy = reflect_index(y + dy - p, h);
          S* drow = dst + static_cast<std::size_t>(sy) * wd;
          for (int xx = 0; xx < wd; ++xx) {
            drow[reflect_index(xx + dx - p, wd)] += row[static_cast<std::size_t>(y) * wd + xx];
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Per-channel (instance) normalization with affine parameters.

template <class S>
struct NormCtx {
  Tensor<S> xhat;
  std::vector<S> invstd;
};

template <class S>
Tensor<S> instance_norm(const Tensor<S>& x, const S* gamma, const S* beta, NormCtx<S>& ctx) {
  const std::size_t n = x.plane();
  ctx.xhat = Tensor<S>(x.c, x.h, x.w);
  ctx.invstd.assign(x.c, S(0));
  Tensor<S> out(x.c, x.h, x.w);
  for (int ci = 0; ci < x.c; ++ci) {
    const S* src = x.channel(ci);
    S mu = 0;
    for (std::size_t i = 0; i < n; ++i) mu += src[i];
    mu /= static_cast<S>(n);
    S var = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const S d = src[i] - mu;
      var += d * d;
    }
    var /= static_cast<S>(n);
    const S inv = S(1) / std::sqrt(var + static_cast<S>(kNormEps));
    ctx.invstd[ci] = inv;
    S* xh = ctx.xhat.channel(ci);
    S* dst = out.channel(ci);
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = (src[i] - mu) * inv;
      dst[i] = gamma[ci] * xh[i] + beta[ci];
    }
  }
  return out;
}

template <class S>
Tensor<S> instance_norm_backward(const Tensor<S>& gy, const S* gamma, const NormCtx<S>& ctx,
                                 S* ggamma, S* gbeta) {
  const std::size_t n = gy.plane();
  Tensor<S> gx(gy.c, gy.h, gy.w);
  for (int ci = 0; ci < gy.c; ++ci) {
    const S* g = gy.channel(ci);
    const S* xh = ctx.xhat.channel(ci);
    S sum_g = 0, sum_gx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_g += g[i];
      sum_gx += g[i] * xh[i];
    }
    ggamma[ci] += sum_gx;
    gbeta[ci] += sum_g;

    const S scale = gamma[ci] * ctx.invstd[ci] / static_cast<S>(n);
    S* dst = gx.channel(ci);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = scale * (static_cast<S>(n) * g[i] - sum_g - xh[i] * sum_gx);
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Leaky rectifier.

template <class S>
Tensor<S> leaky_relu(const Tensor<S>& x, S slope, Tensor<S>& saved_in) {
  saved_in = x;
  Tensor<S> out(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.v[i] = x.v[i] > S(0) ? x.v[i] : slope * x.v[i];
  }
  return out;
}

template <class S>
Tensor<S> leaky_relu_backward(const Tensor<S>& gy, S slope, const Tensor<S>& saved_in) {
  Tensor<S> gx(gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i) {
    gx.v[i] = saved_in.v[i] > S(0) ? gy.v[i] : slope * gy.v[i];
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Max pooling with kernel == stride; k = 1 is a pass-through.

template <class S>
struct PoolCtx {
  std::vector<std::int32_t> argmax;
  int hin = 0, win = 0;
};

template <class S>
Tensor<S> max_pool(const Tensor<S>& x, int k, PoolCtx<S>& ctx) {
  if (x.h % k != 0 || x.w % k != 0) {
    throw std::invalid_argument("max_pool: dimensions not divisible by the pooling factor");
  }
  const int ho = x.h / k, wo = x.w / k;
  ctx.hin = x.h;
  ctx.win = x.w;
  ctx.argmax.assign(static_cast<std::size_t>(x.c) * ho * wo, 0);
  Tensor<S> out(x.c, ho, wo);
  std::size_t oi = 0;
  for (int ci = 0; ci < x.c; ++ci) {
    const S* src = x.channel(ci);
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx, ++oi) {
        S best = src[static_cast<std::size_t>(y * k) * x.w + xx * k];
        std::int32_t besti = y * k * x.w + xx * k;
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            const std::int32_t idx = (y * k + dy) * x.w + (xx * k + dx);
            if (src[idx] > best) {
              best = src[idx];
              besti = idx;
            }
          }
        }
        out.v[oi] = best;
        ctx.argmax[oi] = besti;
      }
    }
  }
  return out;
}

template <class S>
Tensor<S> max_pool_backward(const Tensor<S>& gy, const PoolCtx<S>& ctx) {
  Tensor<S> gx(gy.c, ctx.hin, ctx.win);
  std::size_t oi = 0;
  for (int ci = 0; ci < gy.c; ++ci) {
    S* dst = gx.channel(ci);
    for (std::size_t i = 0; i < gy.plane(); ++i, ++oi) {
      dst[ctx.argmax[oi]] += gy.v[oi];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// 2x2 stride-2 transposed convolution (learned upsampling).
// Weight layout: (cout, cin, 2, 2).

template <class S>
struct UpCtx {
  Tensor<S> x;
};

template <class S>
Tensor<S> conv_transpose2(const Tensor<S>& x, const S* w, const S* b, int cout, UpCtx<S>& ctx) {
  ctx.x = x;
  const int cin = x.c;
  const std::size_t n = x.plane();

  MatX<S> wp(static_cast<Eigen::Index>(cout) * 4, cin);
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < 4; ++t)
        wp(co * 4 + t, ci) = w[(static_cast<std::size_t>(co) * cin + ci) * 4 + t];

  CMapMat<S> xm(x.data(), cin, static_cast<Eigen::Index>(n));
  MatX<S> yp = wp * xm; // (cout*4) x n

  Tensor<S> out(cout, x.h * 2, x.w * 2);
  for (int co = 0; co < cout; ++co) {
    S* dst = out.channel(co);
    for (int t = 0; t < 4; ++t) {
      const int dy = t / 2, dx = t % 2;
      const S* row = yp.data() + static_cast<std::size_t>(co * 4 + t) * n;
      for (int y = 0; y < x.h; ++y) {
        S* drow = dst + static_cast<std::size_t>(2 * y + dy) * out.w + dx;
        const S* srow = row + static_cast<std::size_t>(y) * x.w;
        for (int xx = 0; xx < x.w; ++xx) drow[2 * xx] = srow[xx] + b[co];
      }
    }
  }
  return out;
}

template <class S>
Tensor<S> conv_transpose2_backward(const Tensor<S>& gy, const S* w, int cin, const UpCtx<S>& ctx,
                                   S* gw, S* gb) {
  const int cout = gy.c;
  const std::size_t n = ctx.x.plane();

  MatX<S> gyp(static_cast<Eigen::Index>(cout) * 4, static_cast<Eigen::Index>(n));
  for (int co = 0; co < cout; ++co) {
    const S* src = gy.channel(co);
    S bsum = 0;
    for (std::size_t i = 0; i < gy.plane(); ++i) bsum += src[i];
    gb[co] += bsum;
    for (int t = 0; t < 4; ++t) {
      const int dy = t / 2, dx = t % 2;
      S* row = gyp.data() + static_cast<std::size_t>(co * 4 + t) * n;
      for (int y = 0; y < ctx.x.h; ++y) {
        const S* srow = src + static_cast<std::size_t>(2 * y + dy) * gy.w + dx;
        for (int xx = 0; xx < ctx.x.w; ++xx) row[static_cast<std::size_t>(y) * ctx.x.w + xx] = srow[2 * xx];
      }
    }
  }

  CMapMat<S> xm(ctx.x.data(), cin, static_cast<Eigen::Index>(n));
  MatX<S> gwp = gyp * xm.transpose(); // (cout*4) x cin
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < 4; ++t)
        gw[(static_cast<std::size_t>(co) * cin + ci) * 4 + t] += gwp(co * 4 + t, ci);

  MatX<S> wp(static_cast<Eigen::Index>(cout) * 4, cin);
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < 4; ++t)
        wp(co * 4 + t, ci) = w[(static_cast<std::size_t>(co) * cin + ci) * 4 + t];

  Tensor<S> gx(cin, ctx.x.h, ctx.x.w);
  MapMat<S> gxm(gx.data(), cin, static_cast<Eigen::Index>(n));
  gxm.noalias() = wp.transpose() * gyp;
  return gx;
}

// ---------------------------------------------------------------------------
// Channel concatenation and its adjoint.

template <class S>
Tensor<S> concat(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("concat: spatial shape mismatch");
  Tensor<S> out(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

template <class S>
void split_backward(const Tensor<S>& gy, int ca, Tensor<S>& ga, Tensor<S>& gb) {
  ga = Tensor<S>(ca, gy.h, gy.w);
  gb = Tensor<S>(gy.c - ca, gy.h, gy.w);
  std::copy(gy.v.begin(), gy.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), ga.v.begin());
  std::copy(gy.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), gy.v.end(), gb.v.begin());
}

// ---------------------------------------------------------------------------
// Convex fusion of guidance and decoder features: beta*g + (1-beta)*d.

template <class S>
Tensor<S> fuse(const Tensor<S>& g, const Tensor<S>& d, S beta) {
  if (!g.same_shape(d)) throw std::invalid_argument("fuse: feature shape mismatch");
  Tensor<S> out(g.c, g.h, g.w);
  const S one_minus = S(1) - beta;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = beta * g.v[i] + one_minus * d.v[i];
  return out;
}

// ---------------------------------------------------------------------------
// Clamp to [0, 1] with pass-through gradient inside the (closed) interval.

template <class S>
Tensor<S> clamp_unit(const Tensor<S>& x, Tensor<S>& saved_in) {
  saved_in = x;
  Tensor<S> out(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.v[i] = std::min(S(1), std::max(S(0), x.v[i]));
  }
  return out;
}

template <class S>
Tensor<S> clamp_unit_backward(const Tensor<S>& gy, const Tensor<S>& saved_in) {
  Tensor<S> gx(gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i) {
    gx.v[i] = (saved_in.v[i] >= S(0) && saved_in.v[i] <= S(1)) ? gy.v[i] : S(0);
  }
  return gx;
}

} // namespace spinex::nn

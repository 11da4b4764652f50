#pragma once

#include "spinex/image.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace spinex {

/// Dense (channels, height, width) activation tensor for a single image.
template <class S>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<S> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

  std::size_t size() const { return v.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  S& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  S at(int ci, int y, int x) const { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  S* channel(int ci) { return v.data() + static_cast<std::size_t>(ci) * plane(); }
  const S* channel(int ci) const { return v.data() + static_cast<std::size_t>(ci) * plane(); }

  void fill(S value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <class S>
Tensor<S> grid_to_tensor(const Grid& g) {
  Tensor<S> t(1, grid_height(g), grid_width(g));
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) t.at(0, y, x) = static_cast<S>(g(y, x));
  return t;
}

template <class S>
Grid tensor_to_grid(const Tensor<S>& t, int ci = 0) {
  Grid g(t.h, t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) g(y, x) = static_cast<double>(t.at(ci, y, x));
  return g;
}

} // namespace spinex

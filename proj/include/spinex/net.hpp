#pragma once

#include "spinex/layers.hpp"
#include "spinex/rng.hpp"
#include "spinex/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spinex {

/// Raised when a checkpoint and a network topology disagree.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Topology of the encoder-decoder enhancement network.
struct NetSpec {
  int depth = 4;          ///< encoder/decoder levels
  int base_channels = 32; ///< feature width at level 1
  double fusion_beta = 0.6;
  double activation_slope = 0.01;

  void validate() const;
  std::string canonical() const;
  std::uint64_t hash() const;

  /// Feature width at a 1-based level; level depth+1 is the bottleneck.
  int channels_at(int level) const;

  bool operator==(const NetSpec&) const = default;
};

/// One serialized parameter tensor (checkpoints store 32-bit floats).
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

/// Learned weights plus the spec and training metadata they belong to.
struct NetParams {
  NetSpec spec;
  std::uint64_t spec_hash = 0;
  std::vector<NamedTensor> tensors;
  int iteration = 0;
  int epoch = 0;
  std::uint64_t seed = 0;

  void validate() const; ///< finiteness and hash consistency
};

namespace detail {

/// All learned tensors live in one flat buffer; layers address them by offset.
template <class S>
struct ParamStore {
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0, count = 0;
  };
  std::vector<Entry> entries;
  std::vector<S> data;

  std::size_t add(std::string name, std::vector<int> shape) {
    std::size_t count = 1;
    for (const int d : shape) count *= static_cast<std::size_t>(d);
    const std::size_t offset = total;
    entries.push_back({std::move(name), std::move(shape), offset, count});
    total += count;
    return offset;
  }
  void allocate() { data.assign(total, S(0)); }

  std::size_t total = 0;
};

struct ConvOff {
  std::size_t w = 0, b = 0;
  int cin = 0, cout = 0, k = 3;
};
struct NormOff {
  std::size_t g = 0, b = 0;
  int c = 0;
};
struct BlockOff {
  ConvOff conv1, conv2;
  NormOff norm1, norm2;
};

} // namespace detail

/// Encoder-decoder network with an internal guidance branch fused into the
/// decoder path at every upsampling stage. The output is a residual
/// refinement of the input, clamped to [0, 1], so zeroed head weights make
/// the network behave as the identity.
template <class S>
class UNet {
 public:
  using Store = detail::ParamStore<S>;

  explicit UNet(const NetSpec& spec) : spec_(spec) {
    spec_.validate();
    build();
  }

  /// He-style random initialization; the output head gets a small scale so
  /// an untrained network stays close to the identity.
  void init_params(Rng& rng);

  /// Loads weights, checking the spec hash and every tensor shape.
  void load(const NetParams& p);
  NetParams snapshot(int iteration, int epoch, std::uint64_t seed) const;

  const NetSpec& spec() const { return spec_; }
  std::size_t n_params() const { return store_.total; }
  S* param_data() { return store_.data.data(); }
  const S* param_data() const { return store_.data.data(); }
  const std::vector<typename Store::Entry>& param_entries() const { return store_.entries; }

  struct BlockCtx {
    nn::ConvCtx<S> conv1, conv2;
    nn::NormCtx<S> norm1, norm2;
    Tensor<S> act1_in, act2_in;
    Tensor<S> out;
  };
  struct GuideCtx {
    Tensor<S> act_in;
    nn::ConvCtx<S> conv;
    nn::PoolCtx<S> pool;
    Tensor<S> out;
  };
  struct Workspace {
    Tensor<S> x_padded;
    int orig_h = 0, orig_w = 0;
    std::vector<BlockCtx> enc;
    std::vector<nn::PoolCtx<S>> pools;
    BlockCtx bottleneck;
    std::vector<nn::UpCtx<S>> ups;
    std::vector<BlockCtx> dec;
    std::vector<GuideCtx> guide;
    nn::ConvCtx<S> head;
    Tensor<S> clamp_in;
  };

  /// Runs the network on a single-channel image. Inputs whose sides are not
  /// divisible by 2^depth are reflect-padded and the output cropped back.
  Tensor<S> forward(const Tensor<S>& x, Workspace& ws, bool use_guidance = true) const;

  /// Accumulates parameter gradients into `grad` (size n_params()) given the
  /// loss gradient at the output. Must be paired with the forward that
  /// filled `ws`. Returns the gradient with respect to the input.
  Tensor<S> backward(const Tensor<S>& gy, const Workspace& ws, std::vector<S>& grad,
                     bool use_guidance = true) const;

  /// Post-activation output of the first encoder convolution block.
  Tensor<S> first_layer_features(const Tensor<S>& x) const;

  /// Guidance branch at a 1-based level: leaky rectifier, 3x3 convolution,
  /// then max pooling down to the decoder resolution at that level.
  Tensor<S> guidance_features(const Tensor<S>& x, int level) const;

 private:
  void build();

  Tensor<S> run_block(const detail::BlockOff& off, const Tensor<S>& x, BlockCtx& ctx) const;
  Tensor<S> block_backward(const detail::BlockOff& off, const Tensor<S>& gy, const BlockCtx& ctx,
                           std::vector<S>& grad) const;
  Tensor<S> run_guidance(int level_idx, const Tensor<S>& x, GuideCtx& ctx) const;
  void guidance_backward(int level_idx, const Tensor<S>& gy, const GuideCtx& ctx,
                         std::vector<S>& grad, Tensor<S>& gx_accum) const;

  const S* at(std::size_t off) const { return store_.data.data() + off; }

  NetSpec spec_;
  Store store_;
  std::vector<detail::BlockOff> enc_;
  detail::BlockOff bottleneck_;
  std::vector<detail::ConvOff> ups_;
  std::vector<detail::BlockOff> dec_;
  std::vector<detail::ConvOff> guide_;
  detail::ConvOff head_;
};

/// Convex combination beta*guidance + (1-beta)*decoder, elementwise.
template <class S>
Tensor<S> fuse_guidance(const Tensor<S>& guidance, const Tensor<S>& decoder, double beta) {
  return nn::fuse(guidance, decoder, static_cast<S>(beta));
}

// ---------------------------------------------------------------------------
// Implementation.

namespace detail {

template <class S>
BlockOff add_block(ParamStore<S>& store, const std::string& name, int cin, int cout) {
  BlockOff b;
  b.conv1 = {store.add(name + ".conv1.w", {cout, cin, 3, 3}), store.add(name + ".conv1.b", {cout}),
             cin, cout, 3};
  b.norm1 = {store.add(name + ".norm1.g", {cout}), store.add(name + ".norm1.b", {cout}), cout};
  b.conv2 = {store.add(name + ".conv2.w", {cout, cout, 3, 3}),
             store.add(name + ".conv2.b", {cout}), cout, cout, 3};
  b.norm2 = {store.add(name + ".norm2.g", {cout}), store.add(name + ".norm2.b", {cout}), cout};
  return b;
}

} // namespace detail

template <class S>
void UNet<S>::build() {
  const int d = spec_.depth;
  enc_.clear();
  dec_.resize(d);
  ups_.resize(d);
  guide_.resize(d);
  for (int l = 1; l <= d; ++l) {
    const int cin = l == 1 ? 1 : spec_.channels_at(l - 1);
    enc_.push_back(detail::add_block(store_, "enc" + std::to_string(l), cin, spec_.channels_at(l)));
  }
  bottleneck_ = detail::add_block(store_, "bottleneck", spec_.channels_at(d), spec_.channels_at(d + 1));
  for (int l = d; l >= 1; --l) {
    const int cl = spec_.channels_at(l);
    const std::string sl = std::to_string(l);
    ups_[l - 1] = {store_.add("up" + sl + ".w", {cl, spec_.channels_at(l + 1), 2, 2}),
                   store_.add("up" + sl + ".b", {cl}), spec_.channels_at(l + 1), cl, 2};
    dec_[l - 1] = detail::add_block(store_, "dec" + sl, 2 * cl, cl);
    guide_[l - 1] = {store_.add("guide" + sl + ".w", {cl, 1, 3, 3}),
                     store_.add("guide" + sl + ".b", {cl}), 1, cl, 3};
  }
  head_ = {store_.add("head.w", {1, spec_.base_channels, 1, 1}), store_.add("head.b", {1}),
           spec_.base_channels, 1, 1};
  store_.allocate();
}

template <class S>
void UNet<S>::init_params(Rng& rng) {
  auto fill_conv = [&](const detail::ConvOff& c, double scale) {
    const double std_dev = scale * std::sqrt(2.0 / (c.cin * c.k * c.k));
    S* w = store_.data.data() + c.w;
    for (int i = 0; i < c.cout * c.cin * c.k * c.k; ++i) w[i] = static_cast<S>(std_dev * rng.gaussian());
    S* b = store_.data.data() + c.b;
    for (int i = 0; i < c.cout; ++i) b[i] = S(0);
  };
  auto fill_norm = [&](const detail::NormOff& nrm) {
    S* g = store_.data.data() + nrm.g;
    S* b = store_.data.data() + nrm.b;
    for (int i = 0; i < nrm.c; ++i) {
      g[i] = S(1);
      b[i] = S(0);
    }
  };
  auto fill_block = [&](const detail::BlockOff& blk) {
    fill_conv(blk.conv1, 1.0);
    fill_norm(blk.norm1);
    fill_conv(blk.conv2, 1.0);
    fill_norm(blk.norm2);
  };
  for (const auto& b : enc_) fill_block(b);
  fill_block(bottleneck_);
  for (int i = spec_.depth - 1; i >= 0; --i) {
    fill_conv(ups_[i], 1.0);
    fill_block(dec_[i]);
    fill_conv(guide_[i], 1.0);
  }
  fill_conv(head_, 0.05); // keep the initial residual small
}

template <class S>
Tensor<S> UNet<S>::run_block(const detail::BlockOff& off, const Tensor<S>& x, BlockCtx& ctx) const {
  const S slope = static_cast<S>(spec_.activation_slope);
  Tensor<S> t = nn::conv2d(x, at(off.conv1.w), at(off.conv1.b), off.conv1.cout, 3, ctx.conv1);
  t = nn::instance_norm(t, at(off.norm1.g), at(off.norm1.b), ctx.norm1);
  t = nn::leaky_relu(t, slope, ctx.act1_in);
  t = nn::conv2d(t, at(off.conv2.w), at(off.conv2.b), off.conv2.cout, 3, ctx.conv2);
  t = nn::instance_norm(t, at(off.norm2.g), at(off.norm2.b), ctx.norm2);
  ctx.out = nn::leaky_relu(t, slope, ctx.act2_in);
  return ctx.out;
}

template <class S>
Tensor<S> UNet<S>::block_backward(const detail::BlockOff& off, const Tensor<S>& gy,
                                  const BlockCtx& ctx, std::vector<S>& grad) const {
  const S slope = static_cast<S>(spec_.activation_slope);
  S* g = grad.data();
  Tensor<S> t = nn::leaky_relu_backward(gy, slope, ctx.act2_in);
  t = nn::instance_norm_backward(t, at(off.norm2.g), ctx.norm2, g + off.norm2.g, g + off.norm2.b);
  t = nn::conv2d_backward(t, at(off.conv2.w), off.conv2.cin, 3, ctx.conv2, g + off.conv2.w,
                          g + off.conv2.b);
  t = nn::leaky_relu_backward(t, slope, ctx.act1_in);
  t = nn::instance_norm_backward(t, at(off.norm1.g), ctx.norm1, g + off.norm1.g, g + off.norm1.b);
  return nn::conv2d_backward(t, at(off.conv1.w), off.conv1.cin, 3, ctx.conv1, g + off.conv1.w,
                             g + off.conv1.b);
}

template <class S>
Tensor<S> UNet<S>::run_guidance(int level_idx, const Tensor<S>& x, GuideCtx& ctx) const {
  const detail::ConvOff& c = guide_[level_idx];
  Tensor<S> t = nn::leaky_relu(x, static_cast<S>(spec_.activation_slope), ctx.act_in);
  t = nn::conv2d(t, at(c.w), at(c.b), c.cout, 3, ctx.conv);
  ctx.out = nn::max_pool(t, 1 << level_idx, ctx.pool);
  return ctx.out;
}

template <class S>
void UNet<S>::guidance_backward(int level_idx, const Tensor<S>& gy, const GuideCtx& ctx,
                                std::vector<S>& grad, Tensor<S>& gx_accum) const {
  const detail::ConvOff& c = guide_[level_idx];
  S* g = grad.data();
  Tensor<S> t = nn::max_pool_backward(gy, ctx.pool);
  t = nn::conv2d_backward(t, at(c.w), c.cin, 3, ctx.conv, g + c.w, g + c.b);
  t = nn::leaky_relu_backward(t, static_cast<S>(spec_.activation_slope), ctx.act_in);
  for (std::size_t i = 0; i < gx_accum.size(); ++i) gx_accum.v[i] += t.v[i];
}

template <class S>
Tensor<S> UNet<S>::forward(const Tensor<S>& x, Workspace& ws, bool use_guidance) const {
  if (x.c != 1) throw std::invalid_argument("forward: expected a single-channel input");
  const int d = spec_.depth;
  const int mult = 1 << d;
  ws.orig_h = x.h;
  ws.orig_w = x.w;
  const int ph = (mult - x.h % mult) % mult;
  const int pw = (mult - x.w % mult) % mult;
  if (ph != 0 || pw != 0) {
    const Grid g = tensor_to_grid(x);
    ws.x_padded = grid_to_tensor<S>(reflect_pad(g, 0, ph, 0, pw));
  } else {
    ws.x_padded = x;
  }

  ws.enc.resize(d);
  ws.pools.resize(d);
  ws.ups.resize(d);
  ws.dec.resize(d);
  ws.guide.resize(d);

  Tensor<S> f = ws.x_padded;
  for (int l = 0; l < d; ++l) {
    f = run_block(enc_[l], f, ws.enc[l]);
    f = nn::max_pool(f, 2, ws.pools[l]);
  }
  f = run_block(bottleneck_, f, ws.bottleneck);

  const S beta = static_cast<S>(spec_.fusion_beta);
  for (int l = d - 1; l >= 0; --l) {
    const detail::ConvOff& up = ups_[l];
    Tensor<S> u = nn::conv_transpose2(f, at(up.w), at(up.b), up.cout, ws.ups[l]);
    Tensor<S> c = nn::concat(u, ws.enc[l].out);
    Tensor<S> dout = run_block(dec_[l], c, ws.dec[l]);
    if (use_guidance) {
      Tensor<S> gfeat = run_guidance(l, ws.x_padded, ws.guide[l]);
      f = nn::fuse(gfeat, dout, beta);
    } else {
      f = dout;
    }
  }

  Tensor<S> r = nn::conv2d(f, at(head_.w), at(head_.b), 1, 1, ws.head);
  Tensor<S> sum(1, r.h, r.w);
  for (std::size_t i = 0; i < sum.size(); ++i) sum.v[i] = ws.x_padded.v[i] + r.v[i];
  Tensor<S> out = nn::clamp_unit(sum, ws.clamp_in);

  if (ph != 0 || pw != 0) {
    Tensor<S> cropped(1, ws.orig_h, ws.orig_w);
    for (int y = 0; y < ws.orig_h; ++y)
      for (int xx = 0; xx < ws.orig_w; ++xx) cropped.at(0, y, xx) = out.at(0, y, xx);
    return cropped;
  }
  return out;
}

template <class S>
Tensor<S> UNet<S>::backward(const Tensor<S>& gy, const Workspace& ws, std::vector<S>& grad,
                            bool use_guidance) const {
  const int d = spec_.depth;
  if (grad.size() != store_.total) grad.assign(store_.total, S(0));

  // Re-embed the cropped output gradient into the padded frame.
  Tensor<S> gout(1, ws.x_padded.h, ws.x_padded.w);
  for (int y = 0; y < gy.h; ++y)
    for (int x = 0; x < gy.w; ++x) gout.at(0, y, x) = gy.at(0, y, x);

  Tensor<S> gsum = nn::clamp_unit_backward(gout, ws.clamp_in);
  Tensor<S> gxp = gsum; // residual connection
  Tensor<S> gf = nn::conv2d_backward(gsum, at(head_.w), head_.cin, 1, ws.head,
                                     grad.data() + head_.w, grad.data() + head_.b);

  const S beta = static_cast<S>(spec_.fusion_beta);
  std::vector<Tensor<S>> gskip(d);
  for (int l = 0; l < d; ++l) {
    Tensor<S> gd;
    if (use_guidance) {
      Tensor<S> gg(gf.c, gf.h, gf.w);
      gd = Tensor<S>(gf.c, gf.h, gf.w);
      for (std::size_t i = 0; i < gf.size(); ++i) {
        gg.v[i] = beta * gf.v[i];
        gd.v[i] = (S(1) - beta) * gf.v[i];
      }
      guidance_backward(l, gg, ws.guide[l], grad, gxp);
    } else {
      gd = gf;
    }
    Tensor<S> gc = block_backward(dec_[l], gd, ws.dec[l], grad);
    Tensor<S> gu;
    nn::split_backward(gc, spec_.channels_at(l + 1), gu, gskip[l]);
    const detail::ConvOff& up = ups_[l];
    gf = nn::conv_transpose2_backward(gu, at(up.w), up.cin, ws.ups[l], grad.data() + up.w,
                                      grad.data() + up.b);
  }

  Tensor<S> gflow = block_backward(bottleneck_, gf, ws.bottleneck, grad);
  for (int l = d - 1; l >= 0; --l) {
    Tensor<S> ge = nn::max_pool_backward(gflow, ws.pools[l]);
    for (std::size_t i = 0; i < ge.size(); ++i) ge.v[i] += gskip[l].v[i];
    gflow = block_backward(enc_[l], ge, ws.enc[l], grad);
  }
  for (std::size_t i = 0; i < gxp.size(); ++i) gxp.v[i] += gflow.v[i];

  if (ws.x_padded.h != ws.orig_h || ws.x_padded.w != ws.orig_w) {
    // Adjoint of the reflect padding applied in forward.
    Tensor<S> gx(1, ws.orig_h, ws.orig_w);
    for (int y = 0; y < ws.x_padded.h; ++y) {
      const int sy = reflect_index(y, ws.orig_h);
      for (int x = 0; x < ws.x_padded.w; ++x) {
        gx.at(0, sy, reflect_index(x, ws.orig_w)) += gxp.at(0, y, x);
      }
    }
    return gx;
  }
  return gxp;
}

template <class S>
Tensor<S> UNet<S>::first_layer_features(const Tensor<S>& x) const {
  BlockCtx ctx;
  return run_block(enc_[0], x, ctx);
}

template <class S>
Tensor<S> UNet<S>::guidance_features(const Tensor<S>& x, int level) const {
  if (level < 1 || level > spec_.depth) {
    throw std::invalid_argument("guidance_features: level out of range");
  }
  GuideCtx ctx;
  return run_guidance(level - 1, x, ctx);
}

template <class S>
void UNet<S>::load(const NetParams& p) {
  p.validate();
  if (p.spec_hash != spec_.hash()) {
    throw ConfigError("checkpoint spec hash " + std::to_string(p.spec_hash) +
                      " does not match network spec hash " + std::to_string(spec_.hash()));
  }
  if (p.tensors.size() != store_.entries.size()) {
    throw ConfigError("checkpoint tensor count mismatch");
  }
  for (std::size_t i = 0; i < store_.entries.size(); ++i) {
    const auto& e = store_.entries[i];
    const auto& t = p.tensors[i];
    if (t.name != e.name || t.shape != e.shape || t.data.size() != e.count) {
      throw ConfigError("checkpoint tensor '" + t.name + "' does not match '" + e.name + "'");
    }
    for (std::size_t j = 0; j < e.count; ++j) store_.data[e.offset + j] = static_cast<S>(t.data[j]);
  }
}

template <class S>
NetParams UNet<S>::snapshot(int iteration, int epoch, std::uint64_t seed) const {
  NetParams p;
  p.spec = spec_;
  p.spec_hash = spec_.hash();
  p.iteration = iteration;
  p.epoch = epoch;
  p.seed = seed;
  p.tensors.reserve(store_.entries.size());
  for (const auto& e : store_.entries) {
    NamedTensor t;
    t.name = e.name;
    t.shape = e.shape;
    t.data.resize(e.count);
    for (std::size_t j = 0; j < e.count; ++j) t.data[j] = static_cast<float>(store_.data[e.offset + j]);
    p.tensors.push_back(std::move(t));
  }
  return p;
}

} // namespace spinex

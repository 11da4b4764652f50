#include "spinex/net.hpp"

#include "spinex/checkpoint.hpp"
#include "spinex/losses.hpp"
#include "spinex/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace spinex;

namespace {

template <class S>
Tensor<S> random_image(Rng& rng, int h, int w, double lo = 0.15, double hi = 0.85) {
  Tensor<S> t(1, h, w);
  for (auto& v : t.v) v = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

} // namespace

TEST_CASE("forward shape, finiteness and determinism") {
  NetSpec spec;
  spec.depth = 3;
  spec.base_channels = 8;
  UNet<float> net(spec);
  Rng rng(42);
  net.init_params(rng);

  Rng irng(1);
  const Tensor<float> x = random_image<float>(irng, 64, 64);
  UNet<float>::Workspace ws1, ws2;
  const Tensor<float> y1 = net.forward(x, ws1);
  const Tensor<float> y2 = net.forward(x, ws2);
  CHECK(y1.c == 1);
  CHECK(y1.h == 64);
  CHECK(y1.w == 64);
  for (const float v : y1.v) CHECK(std::isfinite(v));
  CHECK(y1.v == y2.v); // bitwise purity

  // Non-divisible sizes go through reflect pad and crop.
  const Tensor<float> odd = random_image<float>(irng, 50, 46);
  UNet<float>::Workspace ws3;
  const Tensor<float> y3 = net.forward(odd, ws3);
  CHECK(y3.h == 50);
  CHECK(y3.w == 46);
  for (const float v : y3.v) CHECK(std::isfinite(v));
}

TEST_CASE("fusion_beta = 0 matches the guidance-ablated network bitwise") {
  NetSpec spec;
  spec.depth = 2;
  spec.base_channels = 8;
  spec.fusion_beta = 0.0;
  UNet<float> net(spec);
  Rng rng(7);
  net.init_params(rng);

  Rng irng(2);
  const Tensor<float> x = random_image<float>(irng, 32, 32);
  UNet<float>::Workspace wa, wb;
  const Tensor<float> with_guidance = net.forward(x, wa, true);
  const Tensor<float> ablated = net.forward(x, wb, false);
  CHECK(with_guidance.v == ablated.v);
}

TEST_CASE("fuse_guidance convex combination") {
  Tensor<float> g(2, 4, 4), d(2, 4, 4);
  g.fill(1.0f);
  d.fill(0.0f);
  const Tensor<float> equal = fuse_guidance(g, g, 0.3);
  CHECK(equal.v == g.v);

  const Tensor<float> mixed = fuse_guidance(g, d, 0.6);
  for (const float v : mixed.v) CHECK(v == doctest::Approx(0.6f));

  const Tensor<float> endpoint = fuse_guidance(g, d, 1.0);
  CHECK(endpoint.v == g.v);

  Tensor<float> bad(1, 4, 4);
  CHECK_THROWS_AS(fuse_guidance(g, bad, 0.5), std::invalid_argument);
}

TEST_CASE("guidance features: shapes, zeros, slope scaling") {
  NetSpec spec;
  spec.depth = 4;
  spec.base_channels = 8;
  UNet<float> net(spec);
  Rng rng(5);
  net.init_params(rng);

  Tensor<float> zero(1, 64, 64);
  const Tensor<float> gz = net.guidance_features(zero, 2);
  CHECK(gz.c == 16);
  CHECK(gz.h == 32);
  CHECK(gz.w == 32);
  for (const float v : gz.v) CHECK(v == 0.0f);

  // Decoder-level spatial sizes at every level.
  for (int level = 1; level <= 4; ++level) {
    const Tensor<float> gf = net.guidance_features(random_image<float>(rng, 64, 64), level);
    CHECK(gf.c == spec.channels_at(level));
    CHECK(gf.h == 64 >> (level - 1));
  }
  CHECK_THROWS_AS(net.guidance_features(zero, 5), std::invalid_argument);

  // On an all-negative input the rectifier scales by activation_slope, so a
  // slope-1 twin network fed the pre-scaled input must agree.
  NetSpec linear_spec = spec;
  linear_spec.activation_slope = 1.0;
  UNet<float> twin(linear_spec);
  Rng rng_a(5);
  net.init_params(rng_a);
  Rng rng_b(5);
  twin.init_params(rng_b);

  Tensor<float> neg(1, 64, 64);
  Rng nrng(3);
  for (auto& v : neg.v) v = static_cast<float>(-nrng.uniform(0.1, 1.0));
  Tensor<float> scaled = neg;
  for (auto& v : scaled.v) v *= static_cast<float>(spec.activation_slope);

  const Tensor<float> a = net.guidance_features(neg, 3);
  const Tensor<float> b = twin.guidance_features(scaled, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.v[i] == doctest::Approx(b.v[i]).epsilon(1e-5));
}

TEST_CASE("first layer features contract") {
  NetSpec spec; // depth 4, base 32
  UNet<float> net(spec);
  Rng rng(9);
  net.init_params(rng);

  Tensor<float> zero(1, 16, 16);
  const Tensor<float> f0 = net.first_layer_features(zero);
  CHECK(f0.c == 32);
  CHECK(f0.h == 16);
  CHECK(f0.w == 16);
  for (const float v : f0.v) CHECK(v == 0.0f);

  const Tensor<float> x = random_image<float>(rng, 16, 16);
  const Tensor<float> f1 = net.first_layer_features(x);
  const Tensor<float> f2 = net.first_layer_features(x);
  CHECK(f1.v == f2.v);
}

TEST_CASE("checkpoint round-trip is bitwise and spec mismatch is rejected") {
  NetSpec spec;
  spec.depth = 2;
  spec.base_channels = 8;
  UNet<float> net(spec);
  Rng rng(21);
  net.init_params(rng);

  const NetParams p = net.snapshot(1, 40, 21);
  const auto tmp = std::filesystem::temp_directory_path() / "spinex_test.ckpt";
  save_checkpoint(tmp.string(), p);
  const NetParams q = load_checkpoint(tmp.string());
  REQUIRE(q.tensors.size() == p.tensors.size());
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    CHECK(q.tensors[i].name == p.tensors[i].name);
    CHECK(q.tensors[i].data == p.tensors[i].data); // bit-exact floats
  }
  CHECK(q.iteration == 1);
  CHECK(q.epoch == 40);

  UNet<float> same(spec);
  CHECK_NOTHROW(same.load(q));

  NetSpec other = spec;
  other.base_channels = 16;
  UNet<float> mismatched(other);
  CHECK_THROWS_AS(mismatched.load(q), ConfigError);
  std::filesystem::remove(tmp);
}

TEST_CASE("parameter gradients match central finite differences") {
  NetSpec spec;
  spec.depth = 2;
  spec.base_channels = 8; // the smallest width the spec admits
  UNet<double> net(spec);
  Rng rng(1234);
  net.init_params(rng);

  Rng irng(77);
  const Tensor<double> x = random_image<double>(irng, 16, 16, 0.2, 0.8);
  Tensor<double> f(1, 16, 16), yd(1, 16, 16);
  for (auto& v : f.v) v = irng.uniform();
  for (auto& v : yd.v) v = irng.uniform(-0.1, 0.1);
  const LossWeights w{1.0, 0.001};

  const auto loss_value = [&]() {
    UNet<double>::Workspace ws;
    const Tensor<double> y = net.forward(x, ws);
    return static_cast<double>(total_loss_with_grad<double>(y, f, yd, w, nullptr).total);
  };

  // Reverse-mode gradient.
  UNet<double>::Workspace ws;
  const Tensor<double> y = net.forward(x, ws);
  Tensor<double> gy;
  total_loss_with_grad<double>(y, f, yd, w, &gy);
  std::vector<double> grad(net.n_params(), 0.0);
  net.backward(gy, ws, grad);

  // Central differences on a deterministic sample of every tensor.
  const double h = 1e-4;
  Rng pick(5);
  for (const auto& e : net.param_entries()) {
    const std::size_t samples = std::min<std::size_t>(e.count, 6);
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t j = e.offset + (e.count <= 6 ? s : pick.below(e.count));
      const double orig = net.param_data()[j];
      net.param_data()[j] = orig + h;
      const double lp = loss_value();
      net.param_data()[j] = orig - h;
      const double lm = loss_value();
      net.param_data()[j] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      num += (grad[j] - fd) * (grad[j] - fd);
      den += fd * fd;
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
    INFO("tensor ", e.name);
    CHECK(rel < 1e-4);
  }
}

#include "spinex/training.hpp"

#include "spinex/entropy.hpp"
#include "spinex/wilcoxon.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace spinex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Patch extraction.

Grid crop_spine_patch(const Grid& img, const PatchSpec& spec, CropMode mode) {
  if (img.rows() <= 64 || img.cols() <= 64) {
    throw std::invalid_argument("crop_spine_patch: source must be larger than 64x64");
  }
  const int pw = mode == CropMode::Train ? spec.train_w : spec.eval_w;
  const int ph = mode == CropMode::Train ? spec.train_h : spec.eval_h;

  Grid src = img;
  if (src.cols() < pw || src.rows() < ph) {
    const int need_w = std::max(0, pw - grid_width(src));
    const int need_h = std::max(0, ph - grid_height(src));
    src = reflect_pad(src, need_h / 2, need_h - need_h / 2, need_w / 2, need_w - need_w / 2);
  }

  const int center_col = spec.center_col >= 0 ? spec.center_col : grid_width(src) / 2;
  int x0 = center_col - pw / 2;
  x0 = std::max(0, std::min(x0, grid_width(src) - pw));
  int y0 = grid_height(src) / 2 - ph / 2;
  y0 = std::max(0, std::min(y0, grid_height(src) - ph));

  Grid out(ph, pw);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) out(y, x) = src(y0 + y, x0 + x);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration.

void TrainConfig::validate() const {
  if (!(learn_rate > 0.0)) throw std::invalid_argument("learn_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw std::invalid_argument("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw std::invalid_argument("adam_beta2 must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (iterations < 1 || iterations > 3) throw std::invalid_argument("iterations must be in {1,2,3}");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (loss_weights.lambda1 < 0.0 || loss_weights.lambda2 < 0.0) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  net.validate();
  preprocess.validate();
}

namespace {

DelVariant del_variant_from(const std::string& s) {
  if (s == "DEL") return DelVariant::Del;
  if (s == "L2-to-original") return DelVariant::L2ToOriginal;
  throw std::invalid_argument("del_variant must be DEL or L2-to-original, got '" + s + "'");
}

GclVariant gcl_variant_from(const std::string& s) {
  if (s == "GCL") return GclVariant::Gcl;
  if (s == "L2-to-detail") return GclVariant::L2ToDetail;
  throw std::invalid_argument("gcl_variant must be GCL or L2-to-detail, got '" + s + "'");
}

std::string to_string(DelVariant v) {
  return v == DelVariant::Del ? "DEL" : "L2-to-original";
}
std::string to_string(GclVariant v) {
  return v == GclVariant::Gcl ? "GCL" : "L2-to-detail";
}

} // namespace

TrainConfig train_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  TrainConfig cfg;
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("learn_rate", cfg.learn_rate);
  get("adam_beta1", cfg.adam_beta1);
  get("adam_beta2", cfg.adam_beta2);
  get("batch_size", cfg.batch_size);
  get("epochs", cfg.epochs);
  get("iterations", cfg.iterations);
  get("seed", cfg.seed);
  get("jobs", cfg.jobs);
  if (j.contains("loss_weights")) {
    cfg.loss_weights.lambda1 = j["loss_weights"].value("lambda1", cfg.loss_weights.lambda1);
    cfg.loss_weights.lambda2 = j["loss_weights"].value("lambda2", cfg.loss_weights.lambda2);
  }
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    cfg.ablation.guidance = a.value("guidance", true);
    if (a.contains("del_variant")) cfg.ablation.del_variant = del_variant_from(a["del_variant"]);
    if (a.contains("gcl_variant")) cfg.ablation.gcl_variant = gcl_variant_from(a["gcl_variant"]);
    cfg.ablation.preprocessing = a.value("preprocessing", true);
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    cfg.net.depth = n.value("depth", cfg.net.depth);
    cfg.net.base_channels = n.value("base_channels", cfg.net.base_channels);
    cfg.net.fusion_beta = n.value("fusion_beta", cfg.net.fusion_beta);
    cfg.net.activation_slope = n.value("activation_slope", cfg.net.activation_slope);
  }
  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    cfg.preprocess.lambda_smooth = p.value("lambda_smooth", cfg.preprocess.lambda_smooth);
    cfg.preprocess.alpha = p.value("alpha", cfg.preprocess.alpha);
    cfg.preprocess.epsilon = p.value("epsilon", cfg.preprocess.epsilon);
    cfg.preprocess.divide_floor = p.value("divide_floor", cfg.preprocess.divide_floor);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return train_config_from_json_text(text);
}

std::string train_config_to_json_text(const TrainConfig& cfg) {
  json j;
  j["learn_rate"] = cfg.learn_rate;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["iterations"] = cfg.iterations;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["loss_weights"] = {{"lambda1", cfg.loss_weights.lambda1},
                       {"lambda2", cfg.loss_weights.lambda2}};
  j["ablation"] = {{"guidance", cfg.ablation.guidance},
                   {"del_variant", to_string(cfg.ablation.del_variant)},
                   {"gcl_variant", to_string(cfg.ablation.gcl_variant)},
                   {"preprocessing", cfg.ablation.preprocessing}};
  j["net"] = {{"depth", cfg.net.depth},
              {"base_channels", cfg.net.base_channels},
              {"fusion_beta", cfg.net.fusion_beta},
              {"activation_slope", cfg.net.activation_slope}};
  j["preprocess"] = {{"lambda_smooth", cfg.preprocess.lambda_smooth},
                     {"alpha", cfg.preprocess.alpha},
                     {"epsilon", cfg.preprocess.epsilon},
                     {"divide_floor", cfg.preprocess.divide_floor}};
  return j.dump(1);
}

// ---------------------------------------------------------------------------
// Corpus handling.

TrainCorpus build_corpus(const std::vector<Grid>& patches, const TrainConfig& cfg) {
  if (patches.empty()) throw std::invalid_argument("build_corpus: empty patch set");
  TrainCorpus c;
  c.inputs.resize(patches.size());
  c.details.resize(patches.size());
  parallel_for(patches.size(), cfg.jobs, [&](std::size_t i) {
    c.inputs[i] = cfg.ablation.preprocessing ? compose_enhanced(patches[i], cfg.preprocess)
                                             : normalize_minmax(patches[i]);
    c.details[i] = details_layer(c.inputs[i], cfg.preprocess);
  });
  return c;
}

TrainCorpus advance_corpus(const TrainCorpus& corpus, const NetParams& checkpoint,
                           const TrainConfig& cfg) {
  UNet<float> net(checkpoint.spec);
  net.load(checkpoint);
  TrainCorpus next;
  next.inputs.resize(corpus.inputs.size());
  next.details.resize(corpus.inputs.size());
  parallel_for(corpus.inputs.size(), cfg.jobs, [&](std::size_t i) {
    typename UNet<float>::Workspace ws;
    const Tensor<float> out =
        net.forward(grid_to_tensor<float>(corpus.inputs[i]), ws, cfg.ablation.guidance);
    next.inputs[i] = tensor_to_grid(out);
    next.details[i] = details_layer(next.inputs[i], cfg.preprocess);
  });
  return next;
}

// ---------------------------------------------------------------------------
// The optimizer loop.

namespace {

struct Adam {
  std::vector<float> m, v;
  double beta1, beta2, lr;
  long long step = 0;

  Adam(std::size_t n, const TrainConfig& cfg)
      : m(n, 0.0f), v(n, 0.0f), beta1(cfg.adam_beta1), beta2(cfg.adam_beta2), lr(cfg.learn_rate) {}

  void update(float* params, const float* grad, std::size_t n) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    constexpr double eps = 1e-8;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = static_cast<float>(beta1 * m[i] + (1.0 - beta1) * grad[i]);
      v[i] = static_cast<float>(beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
};

/// Per-image loss against the batch's detail-enhancement target, honoring
/// the ablation variants. Returns the breakdown and the output gradient.
LossBreakdown<float> image_loss(const Tensor<float>& out, const Tensor<float>& f_target,
                                const Tensor<float>& input, const Tensor<float>& detail,
                                const TrainConfig& cfg, Tensor<float>& gx) {
  const std::size_t n = out.size();
  gx = Tensor<float>(out.c, out.h, out.w);
  std::vector<float> g1(n, 0.0f), g2(n, 0.0f);

  LossBreakdown<float> b;
  b.del = cfg.ablation.del_variant == DelVariant::Del
              ? loss::mse(out.data(), f_target.data(), n, g1.data())
              : loss::mse(out.data(), input.data(), n, g1.data());
  if (cfg.ablation.gcl_variant == GclVariant::Gcl) {
    std::vector<float> ggc(n, 0.0f);
    const float gc = loss::gradient_correlation_core(out.data(), detail.data(), out.h, out.w,
                                                     ggc.data());
    b.gcl = 1.0f - gc;
    for (std::size_t i = 0; i < n; ++i) g2[i] = -ggc[i];
  } else {
    b.gcl = loss::mse(out.data(), detail.data(), n, g2.data());
  }
  const float l1 = static_cast<float>(cfg.loss_weights.lambda1);
  const float l2 = static_cast<float>(cfg.loss_weights.lambda2);
  b.total = l1 * b.del + l2 * b.gcl;
  for (std::size_t i = 0; i < n; ++i) gx.v[i] = l1 * g1[i] + l2 * g2[i];
  return b;
}

} // namespace

IterationResult train_iteration(const TrainCorpus& corpus, int t, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.inputs.empty()) throw std::invalid_argument("train_iteration: empty corpus");

  UNet<float> net(cfg.net);
  // Fresh weights per refinement iteration, derived from the run seed.
  Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(t));
  net.init_params(rng);

  const std::size_t n_params = net.n_params();
  Adam adam(n_params, cfg);
  IterationResult result;
  result.trace.reserve(cfg.epochs);

  std::vector<std::size_t> order(corpus.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<float> last_good(net.param_data(), net.param_data() + n_params);
  int last_good_epoch = 0;

  std::vector<float> grad(n_params, 0.0f);
  const int n_images = static_cast<int>(corpus.inputs.size());

  // Per-batch scratch, reused across batches.
  std::vector<typename UNet<float>::Workspace> ws(cfg.batch_size);
  std::vector<Tensor<float>> outs(cfg.batch_size);
  std::vector<std::vector<float>> thread_grads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double ep_loss = 0.0, ep_del = 0.0, ep_gcl = 0.0;

    for (int start = 0; start < n_images; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n_images - start);

      // Forward pass over the batch.
      parallel_for(static_cast<std::size_t>(bsz), cfg.jobs, [&](std::size_t bi) {
        const std::size_t idx = order[start + bi];
        outs[bi] = net.forward(grid_to_tensor<float>(corpus.inputs[idx]), ws[bi],
                               cfg.ablation.guidance);
      });

      // Detail-enhancement target: the max-entropy first-layer feature map
      // across the batch, held constant for the gradient step.
      Tensor<float> f_target;
      if (cfg.ablation.del_variant == DelVariant::Del) {
        std::vector<const Grid*> maps;
        std::vector<Grid> storage;
        for (int bi = 0; bi < bsz; ++bi) {
          const Tensor<float>& feats = ws[bi].enc[0].out;
          for (int c = 0; c < feats.c; ++c) storage.push_back(tensor_to_grid(feats, c));
        }
        maps.reserve(storage.size());
        for (const auto& g : storage) maps.push_back(&g);
        const Grid f = normalize_minmax(storage[select_max_entropy_index(maps)]);
        f_target = grid_to_tensor<float>(f);
      }

      // Backward pass; per-image gradients summed in batch order.
      if (static_cast<int>(thread_grads.size()) < bsz) thread_grads.resize(bsz);
      std::vector<LossBreakdown<float>> breakdowns(bsz);
      parallel_for(static_cast<std::size_t>(bsz), cfg.jobs, [&](std::size_t bi) {
        const std::size_t idx = order[start + bi];
        Tensor<float> gx;
        const Tensor<float> input = grid_to_tensor<float>(corpus.inputs[idx]);
        const Tensor<float> detail = grid_to_tensor<float>(corpus.details[idx]);
        const Tensor<float>& f_ref =
            cfg.ablation.del_variant == DelVariant::Del ? f_target : input;
        breakdowns[bi] = image_loss(outs[bi], f_ref, input, detail, cfg, gx);
        thread_grads[bi].assign(n_params, 0.0f);
        net.backward(gx, ws[bi], thread_grads[bi], cfg.ablation.guidance);
      });

      std::fill(grad.begin(), grad.end(), 0.0f);
      for (int bi = 0; bi < bsz; ++bi) {
        const float scale = 1.0f / static_cast<float>(bsz);
        for (std::size_t i = 0; i < n_params; ++i) grad[i] += scale * thread_grads[bi][i];
        ep_loss += breakdowns[bi].total;
        ep_del += breakdowns[bi].del;
        ep_gcl += breakdowns[bi].gcl;
      }

      adam.update(net.param_data(), grad.data(), n_params);
    }

    EpochTrace tr;
    tr.epoch = epoch;
    tr.loss = ep_loss / n_images;
    tr.del = ep_del / n_images;
    tr.gcl = ep_gcl / n_images;
    result.trace.push_back(tr);

    if (!std::isfinite(tr.loss)) {
      // Unsupervised losses can collapse; keep the last finite epoch.
      std::copy(last_good.begin(), last_good.end(), net.param_data());
      result.aborted_non_finite = true;
      result.checkpoint = net.snapshot(t, last_good_epoch, cfg.seed);
      return result;
    }
    std::copy(net.param_data(), net.param_data() + n_params, last_good.begin());
    last_good_epoch = epoch;
  }

  result.checkpoint = net.snapshot(t, cfg.epochs, cfg.seed);
  return result;
}

RunResult run_training(const std::vector<Grid>& train_patches, const TrainConfig& cfg) {
  cfg.validate();
  RunResult run;
  TrainCorpus corpus = build_corpus(train_patches, cfg);
  for (int t = 1; t <= cfg.iterations; ++t) {
    run.iterations.push_back(train_iteration(corpus, t, cfg));
    if (run.iterations.back().aborted_non_finite) break;
    if (t < cfg.iterations) {
      corpus = advance_corpus(corpus, run.iterations.back().checkpoint, cfg);
    }
  }
  return run;
}

Grid iterative_enhance(const Grid& img, const std::vector<NetParams>& checkpoints, int t_steps,
                       const AblationFlags& flags, const PreprocessParams& pp) {
  if (t_steps > static_cast<int>(checkpoints.size())) {
    throw ConfigError("iterative_enhance: " + std::to_string(t_steps) + " steps requested but only " +
                      std::to_string(checkpoints.size()) + " checkpoints available");
  }
  Grid x = flags.preprocessing ? compose_enhanced(img, pp) : normalize_minmax(img);
  for (int t = 0; t < t_steps; ++t) {
    UNet<float> net(checkpoints[t].spec);
    net.load(checkpoints[t]);
    typename UNet<float>::Workspace ws;
    x = tensor_to_grid(net.forward(grid_to_tensor<float>(x), ws, flags.guidance));
  }
  return x;
}

// ---------------------------------------------------------------------------
// Evaluation and ablation.

MetricRow evaluate_image(const std::string& id, const Grid& img, const EvalContext& ctx) {
  MetricRow row;
  row.id = id;
  row.entropy = entropy(img);
  row.brisque = ctx.regressor ? brisque_score(img, *ctx.regressor) : 0.0;
  row.lpc_si = lpc_si(img, ctx.lpc);
  return row;
}

MetricReport evaluate_set(const std::vector<std::string>& ids, const std::vector<Grid>& images,
                          const EvalContext& ctx) {
  if (ids.size() != images.size()) {
    throw std::invalid_argument("evaluate_set: id/image count mismatch");
  }
  MetricReport rep;
  rep.per_image.resize(images.size());
  parallel_for(images.size(), ctx.jobs, [&](std::size_t i) {
    rep.per_image[i] = evaluate_image(ids[i], images[i], ctx);
  });
  rep.finalize();
  return rep;
}

void add_comparisons(MetricReport& report, const MetricReport& baseline, const std::string& pair) {
  for (const char* metric : {"entropy", "brisque", "lpc_si"}) {
    const auto a = report.column(metric);
    const auto b = baseline.column(metric);
    const auto res = wilcoxon_signed_rank(a, b);
    report.comparisons.push_back({pair, metric, res.p_value});
  }
}

std::vector<AblationCell> loss_ablation_grid(const TrainConfig& base) {
  std::vector<AblationCell> grid;
  TrainConfig l2_del = base;
  l2_del.ablation.gcl_variant = GclVariant::L2ToDetail;
  grid.push_back({"l2+DEL", l2_del});
  TrainConfig gcl_l2 = base;
  gcl_l2.ablation.del_variant = DelVariant::L2ToOriginal;
  grid.push_back({"GCL+l2", gcl_l2});
  TrainConfig full = base;
  grid.push_back({"GCL+DEL", full});
  return grid;
}

std::vector<AblationOutcome> run_ablation(const std::vector<Grid>& train_patches,
                                          const std::vector<Grid>& eval_patches,
                                          const std::vector<AblationCell>& grid,
                                          const std::string& reference, const EvalContext& ctx) {
  if (train_patches.empty() || eval_patches.empty()) {
    throw std::invalid_argument("run_ablation: empty corpus");
  }
  std::vector<AblationOutcome> outcomes;
  outcomes.reserve(grid.size());
  for (const auto& cell : grid) {
    AblationOutcome oc;
    oc.name = cell.name;
    oc.run = run_training(train_patches, cell.cfg);

    std::vector<NetParams> ckpts;
    for (const auto& it : oc.run.iterations) ckpts.push_back(it.checkpoint);
    std::vector<Grid> enhanced(eval_patches.size());
    std::vector<std::string> ids(eval_patches.size());
    const int t_steps = static_cast<int>(ckpts.size());
    parallel_for(eval_patches.size(), ctx.jobs, [&](std::size_t i) {
      enhanced[i] = iterative_enhance(eval_patches[i], ckpts, t_steps, cell.cfg.ablation,
                                      cell.cfg.preprocess);
      ids[i] = "eval" + std::to_string(i);
    });
    oc.report = evaluate_set(ids, enhanced, ctx);
    outcomes.push_back(std::move(oc));
  }

  const auto ref = std::find_if(outcomes.begin(), outcomes.end(),
                                [&](const auto& o) { return o.name == reference; });
  if (ref != outcomes.end()) {
    for (auto& oc : outcomes) {
      if (oc.name == reference) continue;
      add_comparisons(oc.report, ref->report, oc.name + "-vs-" + reference);
    }
  }
  return outcomes;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

} // namespace spinex

#pragma once

#include "spinex/image.hpp"
#include "spinex/losses.hpp"
#include "spinex/lpc.hpp"
#include "spinex/net.hpp"
#include "spinex/preprocess.hpp"
#include "spinex/regressor.hpp"
#include "spinex/report.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spinex {

// ---------------------------------------------------------------------------
// Patch extraction.

struct PatchSpec {
  int train_w = 512, train_h = 512;
  int eval_w = 290, eval_h = 512;
  int center_col = -1; ///< spine column; -1 means the geometric center
};

enum class CropMode { Train, Eval };

/// Extracts the spine-centered patch of the mode's configured size around
/// the center column (frontal radiographs carry the spine at midline). If
/// the source is smaller than the patch it is reflect-padded first.
Grid crop_spine_patch(const Grid& img, const PatchSpec& spec, CropMode mode);

// ---------------------------------------------------------------------------
// Training configuration.

enum class DelVariant { Del, L2ToOriginal };
enum class GclVariant { Gcl, L2ToDetail };

struct AblationFlags {
  bool guidance = true;
  DelVariant del_variant = DelVariant::Del;
  GclVariant gcl_variant = GclVariant::Gcl;
  bool preprocessing = true;
};

struct TrainConfig {
  double learn_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  int batch_size = 8;
  int epochs = 400;
  int iterations = 2; ///< refinement steps T, in {1, 2, 3}
  std::uint64_t seed = 0;
  int jobs = 1;
  LossWeights loss_weights;
  AblationFlags ablation;
  NetSpec net;
  PreprocessParams preprocess;

  void validate() const;
};

TrainConfig train_config_from_json_text(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json_text(const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Iterative training.

struct EpochTrace {
  int epoch = 0;
  double loss = 0.0, del = 0.0, gcl = 0.0;
};

struct IterationResult {
  NetParams checkpoint;
  std::vector<EpochTrace> trace;
  bool aborted_non_finite = false;
};

/// Inputs of one refinement iteration with their per-patch detail targets.
struct TrainCorpus {
  std::vector<Grid> inputs;
  std::vector<Grid> details;
};

/// Applies (optional) preprocessing to raw patches and derives the detail
/// targets of the first iteration.
TrainCorpus build_corpus(const std::vector<Grid>& patches, const TrainConfig& cfg);

/// Optimizes a fresh network on the corpus for cfg.epochs epochs and tags
/// the checkpoint with the refinement index t. Aborts on a non-finite loss,
/// returning the last finite-epoch weights.
IterationResult train_iteration(const TrainCorpus& corpus, int t, const TrainConfig& cfg);

/// Enhances every corpus image with a trained checkpoint and recomputes
/// detail targets, producing the next iteration's corpus.
TrainCorpus advance_corpus(const TrainCorpus& corpus, const NetParams& checkpoint,
                           const TrainConfig& cfg);

struct RunResult {
  std::vector<IterationResult> iterations;
};

/// Full multi-iteration training (Eq over t): fresh weights per iteration,
/// each trained on the previous iteration's outputs.
RunResult run_training(const std::vector<Grid>& train_patches, const TrainConfig& cfg);

/// x0 = preprocessed image, x^t = net_t(x^{t-1}); returns x^T.
/// t_steps = 0 returns the preprocessed input. Throws ConfigError when
/// fewer checkpoints than t_steps are supplied.
Grid iterative_enhance(const Grid& img, const std::vector<NetParams>& checkpoints, int t_steps,
                       const AblationFlags& flags, const PreprocessParams& pp);

// ---------------------------------------------------------------------------
// Evaluation and the ablation driver.

struct EvalContext {
  const RegressorModel* regressor = nullptr;
  LpcParams lpc;
  int jobs = 1;
};

MetricRow evaluate_image(const std::string& id, const Grid& img, const EvalContext& ctx);
MetricReport evaluate_set(const std::vector<std::string>& ids, const std::vector<Grid>& images,
                          const EvalContext& ctx);

/// Adds paired Wilcoxon comparisons (one per metric) against a baseline
/// report with identically ordered rows.
void add_comparisons(MetricReport& report, const MetricReport& baseline, const std::string& pair);

struct AblationCell {
  std::string name;
  TrainConfig cfg;
};

struct AblationOutcome {
  std::string name;
  MetricReport report;
  RunResult run;
};

/// Trains every cell of the grid and evaluates it on the held-out patches.
/// Reports of non-reference cells carry Wilcoxon comparisons against the
/// cell named `reference` when present in the grid.
std::vector<AblationOutcome> run_ablation(const std::vector<Grid>& train_patches,
                                          const std::vector<Grid>& eval_patches,
                                          const std::vector<AblationCell>& grid,
                                          const std::string& reference, const EvalContext& ctx);

/// The three loss-variant rows of the loss ablation study.
std::vector<AblationCell> loss_ablation_grid(const TrainConfig& base);

/// Runs fn(0..n-1) with at most `jobs` worker threads; each index writes
/// only its own output slot, so results are scheduling-independent.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace spinex

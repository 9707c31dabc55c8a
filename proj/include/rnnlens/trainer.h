#ifndef RNNLENS_TRAINER_H_
#define RNNLENS_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "rnnlens/corpus.h"
#include "rnnlens/models.h"

namespace rnnlens {

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1.0;
  // Multiplies the learning rate after every epoch.
  double lr_decay = 1.0;
  double clip_norm = 5.0;
  // Truncation window for language models.
  int bptt_steps = 20;
  int batch_size = 20;
  std::uint64_t seed = 0;

  void Validate() const;
  Json ToJson() const;
  static TrainConfig FromJson(const Json& j);
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double valid_metric = 0.0;
};

struct TrainReport {
  // "perplexity" or "accuracy".
  std::string metric;
  std::vector<EpochStats> epochs;
  double final_valid = 0.0;
  double final_test = 0.0;

  Json ToJson() const;
  bool operator==(const TrainReport&) const;
};

// Next-token prediction over a truncated window: inputs[t][b] predicts
// targets[t][b]. `initial` carries state across windows.
struct LmBatch {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets;
  RecurrentState initial;
};

// Whole sequences with one label each; loss is taken at the final step.
struct ClassificationBatch {
  std::vector<TokenSequence> sequences;
  std::vector<int> labels;
};

using Batch = std::variant<LmBatch, ClassificationBatch>;

struct GradientResult {
  // Mean cross-entropy in nats (before loss_scale).
  double loss = 0.0;
  Parameters grads;
  // Final recurrent state of an LmBatch (empty for classification).
  RecurrentState final_state;
};

// Exact gradients of loss_scale * mean cross-entropy via backpropagation
// through time.
GradientResult ComputeGradients(const Parameters& params,
                                const ModelConfig& config, const Batch& batch,
                                double loss_scale = 1.0);

// Loss only (forward pass of ComputeGradients).
double ComputeLoss(const Parameters& params, const ModelConfig& config,
                   const Batch& batch);

double GlobalNorm(const Parameters& grads, const ModelConfig& config);

// Rescales `grads` so that the global norm is at most `clip_norm`. Returns
// the norm before clipping.
double ClipGlobalNorm(Parameters& grads, const ModelConfig& config,
                      double clip_norm);

// exp(mean next-token cross-entropy) over the concatenated split, with state
// carried across sequence boundaries.
double Perplexity(const Parameters& params, const ModelConfig& config,
                  const std::vector<TokenSequence>& split);

// Fraction of sequences whose argmax class equals the label.
double Accuracy(const Parameters& params, const ModelConfig& config,
                const std::vector<TokenSequence>& split,
                const std::vector<int>& labels);

// Recall of one class: correct predictions among sequences labeled `cls`.
double ClassRecall(const Parameters& params, const ModelConfig& config,
                   const std::vector<TokenSequence>& split,
                   const std::vector<int>& labels, int cls);

// Cuts the concatenated training stream into `batch_size` parallel streams
// and `bptt_steps` windows (the classic truncated-BPTT layout).
std::vector<LmBatch> MakeLmWindows(const std::vector<TokenSequence>& split,
                                   int batch_size, int bptt_steps);

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains `checkpoint` in place with SGD, epoch-wise decay and global-norm
// clipping. Throws TrainingDiverged on a non-finite loss.
TrainReport Train(ModelCheckpoint& checkpoint, const Dataset& dataset,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace rnnlens

#endif  // RNNLENS_TRAINER_H_

#ifndef RNNLENS_MODELS_H_
#define RNNLENS_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rnnlens/corpus.h"
#include "rnnlens/io_util.h"

namespace rnnlens {

enum class CellType { kRnn, kLstm, kGru };

std::string_view CellTypeName(CellType cell);
CellType ParseCellType(std::string_view name);

enum class StateKind { kHidden, kCell };

std::string_view StateKindName(StateKind kind);
// Accepts "hidden"/"h" and "cell"/"c".
StateKind ParseStateKind(std::string_view name);

struct ModelConfig {
  CellType cell = CellType::kLstm;
  int layers = 1;
  int hidden_size = 32;
  int embedding_size = 32;
  int vocab_size = 0;
  // K output classes; equals vocab_size for language models.
  int num_classes = 0;
  Scheme scheme = Scheme::kLanguageModel;
  std::uint64_t seed = 0;
  // Trainable per-affine biases. When false they stay at zero.
  bool use_bias = true;
  // h = o * tanh(c) instead of the default h = o * c.
  bool standard_lstm_output = false;

  // Throws ConfigError on violated invariants.
  void Validate() const;

  Json ToJson() const;
  static ModelConfig FromJson(const Json& j);

  bool operator==(const ModelConfig&) const = default;
};

// Default state whose responses are interpreted: cell state for LSTMs,
// hidden state otherwise.
StateKind DefaultStateKind(CellType cell);

// One affine map `recurrent * h_prev + input * x + bias` feeding a gate or
// candidate.
struct Affine {
  Eigen::MatrixXd recurrent;  // n x n
  Eigen::MatrixXd input;      // n x in
  Eigen::MatrixXd bias;       // n x 1
};

// Gate slots inside LayerParams::gates, per cell type.
namespace gate {
inline constexpr int kRnn = 0;
inline constexpr int kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3;
inline constexpr int kUpdate = 0, kReset = 1, kGruCandidate = 2;
}  // namespace gate

// Gate names used in tensor names: rnn {h}, lstm {i,f,o,c}, gru {z,r,h}.
const std::vector<std::string>& GateNames(CellType cell);

struct LayerParams {
  std::vector<Affine> gates;
};

struct Parameters {
  Eigen::MatrixXd embedding;    // V x m
  std::vector<LayerParams> layers;
  Eigen::MatrixXd output;       // K x n
  Eigen::MatrixXd output_bias;  // K x 1

  static Parameters Zeros(const ModelConfig& config);
  // Weights uniform(-scale, scale) from the seeded generator; biases zero.
  static Parameters Random(const ModelConfig& config, std::uint64_t seed,
                           double scale = 0.1);

  // Visits every tensor in a fixed order with its checkpoint name:
  // "embedding", "layer{l}.{gate}.{W|V|b}", "output.U", "output.b".
  template <typename Fn>
  void ForEach(const ModelConfig& config, Fn&& fn);
  template <typename Fn>
  void ForEach(const ModelConfig& config, Fn&& fn) const;

  std::size_t ParameterCount() const;
  bool AllFinite() const;
};

// Per-layer activations at one step. Unused fields stay empty. Columns are
// independent sequences in a batch.
struct LayerStep {
  Eigen::MatrixXd h;          // layer output
  Eigen::MatrixXd c;          // lstm cell state
  Eigen::MatrixXd i, f, o;    // lstm gates
  Eigen::MatrixXd z, r;       // gru gates
  Eigen::MatrixXd candidate;  // lstm c~ or gru h~
};

// h = tanh(W h_prev + V x + b)
LayerStep StepRnn(const Parameters& params, int layer,
                  const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& input);

// i,f,o = sigmoid(.), c~ = tanh(.), c = f*c_prev + i*c~, h = o*c
// (or o*tanh(c) with standard_output).
LayerStep StepLstm(const Parameters& params, int layer,
                   const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev,
                   const Eigen::MatrixXd& input, bool standard_output = false);

// z,r = sigmoid(.), h~ = tanh(W_h (r*h_prev) + V_h x + b),
// h = (1-z)*h_prev + z*h~
LayerStep StepGru(const Parameters& params, int layer,
                  const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& input);

// Recurrent state of every layer for a batch of B columns.
struct RecurrentState {
  std::vector<Eigen::MatrixXd> h;  // per layer, n x B
  std::vector<Eigen::MatrixXd> c;  // per layer, n x B (lstm only)

  static RecurrentState Zeros(const ModelConfig& config, int batch);
};

// Advances every layer by one step. Layer 0 consumes `input` (m x B); layer l
// consumes layer l-1's output at the same step.
std::vector<LayerStep> StepModel(const Parameters& params,
                                 const ModelConfig& config,
                                 const RecurrentState& prev,
                                 const Eigen::MatrixXd& input);

// Numerically stable softmax of a single logit vector.
Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);
// Column-wise softmax.
Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& logits);

struct SequenceOutput {
  // steps[t][l]: populated for every t when recording, else only the last.
  std::vector<std::vector<LayerStep>> steps;
  // Language model: one distribution per step. Classification: one, at T.
  std::vector<Eigen::VectorXd> logits;
  std::vector<Eigen::VectorXd> probabilities;
};

// Runs one sequence from the zero state.
SequenceOutput ForwardSequence(const Parameters& params,
                               const ModelConfig& config,
                               const TokenSequence& ids, bool record);

// Embeds a batch column-wise: result(:, b) = E[ids[b], :]^T.
Eigen::MatrixXd Embed(const Parameters& params, const std::vector<int>& ids);

struct CheckpointMetadata {
  int epochs = 0;
  std::map<std::string, double> final_metrics;
  std::uint64_t seed = 0;
  Json train_report = Json::object();
  // Dataset the model was trained on, used to re-derive evaluation splits.
  Json dataset = Json::object();
};

struct ModelCheckpoint {
  ModelConfig config;
  Parameters params;
  Vocabulary vocabulary;
  CheckpointMetadata metadata;

  SequenceOutput Forward(const TokenSequence& ids, bool record) const {
    return ForwardSequence(params, config, ids, record);
  }
};

inline constexpr int kCheckpointFormatVersion = 1;

Json CheckpointToJson(const ModelCheckpoint& checkpoint);
// Throws CheckpointVersionError, ShapeError or CheckpointCorrupt.
ModelCheckpoint CheckpointFromJson(const Json& j);

void SaveCheckpoint(const ModelCheckpoint& checkpoint,
                    const std::filesystem::path& path);
ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path);
ModelCheckpoint ParseCheckpoint(std::string_view text);

// ---------------------------------------------------------------------------
// Implementation of the tensor visitors.

namespace internal {
template <typename P, typename Fn>
void ForEachTensor(P& params, const ModelConfig& config, Fn&& fn) {
  fn(std::string("embedding"), params.embedding);
  const auto& names = GateNames(config.cell);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t g = 0; g < layer.gates.size(); ++g) {
      fn(prefix + names[g] + ".W", layer.gates[g].recurrent);
      fn(prefix + names[g] + ".V", layer.gates[g].input);
      fn(prefix + names[g] + ".b", layer.gates[g].bias);
    }
  }
  fn(std::string("output.U"), params.output);
  fn(std::string("output.b"), params.output_bias);
}
}  // namespace internal

template <typename Fn>
void Parameters::ForEach(const ModelConfig& config, Fn&& fn) {
  internal::ForEachTensor(*this, config, std::forward<Fn>(fn));
}

template <typename Fn>
void Parameters::ForEach(const ModelConfig& config, Fn&& fn) const {
  internal::ForEachTensor(*this, config, std::forward<Fn>(fn));
}

// True for tensor names that hold biases.
inline bool IsBiasTensor(std::string_view name) {
  return name.size() >= 2 && name.substr(name.size() - 2) == ".b";
}

}  // namespace rnnlens

#endif  // RNNLENS_MODELS_H_

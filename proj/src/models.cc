#include "rnnlens/models.h"

#include <cmath>
#include <random>

#include "rnnlens/error.h"

namespace rnnlens {

std::string_view CellTypeName(CellType cell) {
  switch (cell) {
    case CellType::kRnn:
      return "rnn";
    case CellType::kLstm:
      return "lstm";
    case CellType::kGru:
      return "gru";
  }
  return "rnn";
}

CellType ParseCellType(std::string_view name) {
  if (name == "rnn") return CellType::kRnn;
  if (name == "lstm") return CellType::kLstm;
  if (name == "gru") return CellType::kGru;
  throw ConfigError("unknown cell type '" + std::string(name) + "'");
}

std::string_view StateKindName(StateKind kind) {
  return kind == StateKind::kHidden ? "hidden" : "cell";
}

StateKind ParseStateKind(std::string_view name) {
  if (name == "hidden" || name == "h") return StateKind::kHidden;
  if (name == "cell" || name == "c") return StateKind::kCell;
  throw InvalidArgument("unknown state kind '" + std::string(name) + "'");
}

StateKind DefaultStateKind(CellType cell) {
  return cell == CellType::kLstm ? StateKind::kCell : StateKind::kHidden;
}

void ModelConfig::Validate() const {
  if (layers < 1) throw ConfigError("model.layers must be >= 1");
  if (hidden_size < 1) throw ConfigError("model.hidden_size must be >= 1");
  if (embedding_size < 1) {
    throw ConfigError("model.embedding_size must be >= 1");
  }
  if (vocab_size < 1) throw ConfigError("model.vocab_size must be >= 1");
  if (num_classes < 1) throw ConfigError("model.num_classes must be >= 1");
  if (scheme == Scheme::kLanguageModel && num_classes != vocab_size) {
    throw ConfigError(
        "language models must have num_classes == vocab_size");
  }
}

Json ModelConfig::ToJson() const {
  return Json{{"cell", CellTypeName(cell)},
              {"layers", layers},
              {"hidden_size", hidden_size},
              {"embedding_size", embedding_size},
              {"vocab_size", vocab_size},
              {"num_classes", num_classes},
              {"scheme", SchemeName(scheme)},
              {"seed", seed},
              {"use_bias", use_bias},
              {"standard_lstm_output", standard_lstm_output}};
}

ModelConfig ModelConfig::FromJson(const Json& j) {
  constexpr std::string_view kCtx = "model";
  RequireKnownKeys(j,
                   {"cell", "layers", "hidden_size", "embedding_size",
                    "vocab_size", "num_classes", "scheme", "seed", "use_bias",
                    "standard_lstm_output"},
                   kCtx);
  ModelConfig c;
  c.cell = ParseCellType(GetOr<std::string>(j, "cell", "lstm", kCtx));
  c.layers = GetOr<int>(j, "layers", c.layers, kCtx);
  c.hidden_size = GetOr<int>(j, "hidden_size", c.hidden_size, kCtx);
  c.embedding_size = GetOr<int>(j, "embedding_size", c.embedding_size, kCtx);
  c.vocab_size = GetOr<int>(j, "vocab_size", c.vocab_size, kCtx);
  c.num_classes = GetOr<int>(j, "num_classes", c.num_classes, kCtx);
  c.scheme = ParseScheme(
      GetOr<std::string>(j, "scheme", std::string(SchemeName(c.scheme)), kCtx));
  c.seed = GetOr<std::uint64_t>(j, "seed", c.seed, kCtx);
  c.use_bias = GetOr<bool>(j, "use_bias", c.use_bias, kCtx);
  c.standard_lstm_output =
      GetOr<bool>(j, "standard_lstm_output", c.standard_lstm_output, kCtx);
  return c;
}

const std::vector<std::string>& GateNames(CellType cell) {
  static const std::vector<std::string> kRnnNames = {"h"};
  static const std::vector<std::string> kLstmNames = {"i", "f", "o", "c"};
  static const std::vector<std::string> kGruNames = {"z", "r", "h"};
  switch (cell) {
    case CellType::kRnn:
      return kRnnNames;
    case CellType::kLstm:
      return kLstmNames;
    case CellType::kGru:
      return kGruNames;
  }
  return kRnnNames;
}

Parameters Parameters::Zeros(const ModelConfig& config) {
  config.Validate();
  const int n = config.hidden_size;
  Parameters p;
  p.embedding = Eigen::MatrixXd::Zero(config.vocab_size, config.embedding_size);
  const std::size_t gates = GateNames(config.cell).size();
  p.layers.resize(config.layers);
  for (int l = 0; l < config.layers; ++l) {
    const int in = l == 0 ? config.embedding_size : n;
    p.layers[l].gates.resize(gates);
    for (auto& g : p.layers[l].gates) {
      g.recurrent = Eigen::MatrixXd::Zero(n, n);
      g.input = Eigen::MatrixXd::Zero(n, in);
      g.bias = Eigen::MatrixXd::Zero(n, 1);
    }
  }
  p.output = Eigen::MatrixXd::Zero(config.num_classes, n);
  p.output_bias = Eigen::MatrixXd::Zero(config.num_classes, 1);
  return p;
}

Parameters Parameters::Random(const ModelConfig& config, std::uint64_t seed,
                              double scale) {
  Parameters p = Zeros(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-scale, scale);
  p.ForEach(config, [&](const std::string& name, Eigen::MatrixXd& t) {
    if (IsBiasTensor(name)) return;
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng);
  });
  return p;
}

std::size_t Parameters::ParameterCount() const {
  std::size_t total = embedding.size() + output.size() + output_bias.size();
  for (const auto& layer : layers) {
    for (const auto& g : layer.gates) {
      total += g.recurrent.size() + g.input.size() + g.bias.size();
    }
  }
  return total;
}

bool Parameters::AllFinite() const {
  if (!embedding.allFinite() || !output.allFinite() ||
      !output_bias.allFinite()) {
    return false;
  }
  for (const auto& layer : layers) {
    for (const auto& g : layer.gates) {
      if (!g.recurrent.allFinite() || !g.input.allFinite() ||
          !g.bias.allFinite()) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Cells

namespace {

Eigen::MatrixXd Sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

Eigen::MatrixXd Tanh(const Eigen::MatrixXd& a) {
  return a.array().tanh().matrix();
}

const LayerParams& CheckedLayer(const Parameters& params, int layer,
                                std::size_t gates) {
  if (layer < 0 || layer >= static_cast<int>(params.layers.size())) {
    throw ShapeError("layer index out of range: " + std::to_string(layer));
  }
  const auto& lp = params.layers[layer];
  if (lp.gates.size() != gates) {
    throw ShapeError("layer " + std::to_string(layer) + " has " +
                     std::to_string(lp.gates.size()) + " gates, expected " +
                     std::to_string(gates));
  }
  return lp;
}

void CheckShapes(const Affine& a, const Eigen::MatrixXd& h_prev,
                 const Eigen::MatrixXd& input) {
  if (h_prev.rows() != a.recurrent.cols() ||
      input.rows() != a.input.cols() || h_prev.cols() != input.cols()) {
    throw ShapeError("state/input shape mismatch: h_prev " +
                     std::to_string(h_prev.rows()) + "x" +
                     std::to_string(h_prev.cols()) + ", input " +
                     std::to_string(input.rows()) + "x" +
                     std::to_string(input.cols()) + ", expected n=" +
                     std::to_string(a.recurrent.cols()) + ", in=" +
                     std::to_string(a.input.cols()));
  }
}

Eigen::MatrixXd Apply(const Affine& a, const Eigen::MatrixXd& h_prev,
                      const Eigen::MatrixXd& input) {
  Eigen::MatrixXd out = a.recurrent * h_prev;
  out.noalias() += a.input * input;
  out.colwise() += a.bias.col(0);
  return out;
}

}  // namespace

LayerStep StepRnn(const Parameters& params, int layer,
                  const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& input) {
  const auto& lp = CheckedLayer(params, layer, 1);
  CheckShapes(lp.gates[gate::kRnn], h_prev, input);
  LayerStep s;
  s.h = Tanh(Apply(lp.gates[gate::kRnn], h_prev, input));
  return s;
}

LayerStep StepLstm(const Parameters& params, int layer,
                   const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev,
                   const Eigen::MatrixXd& input, bool standard_output) {
  const auto& lp = CheckedLayer(params, layer, 4);
  CheckShapes(lp.gates[gate::kInput], h_prev, input);
  if (c_prev.rows() != h_prev.rows() || c_prev.cols() != h_prev.cols()) {
    throw ShapeError("cell state shape does not match hidden state");
  }
  LayerStep s;
  s.i = Sigmoid(Apply(lp.gates[gate::kInput], h_prev, input));
  s.f = Sigmoid(Apply(lp.gates[gate::kForget], h_prev, input));
  s.o = Sigmoid(Apply(lp.gates[gate::kOutput], h_prev, input));
  s.candidate = Tanh(Apply(lp.gates[gate::kCandidate], h_prev, input));
  s.c = (s.f.array() * c_prev.array() + s.i.array() * s.candidate.array())
            .matrix();
  if (standard_output) {
    s.h = (s.o.array() * s.c.array().tanh()).matrix();
  } else {
    s.h = (s.o.array() * s.c.array()).matrix();
  }
  return s;
}

LayerStep StepGru(const Parameters& params, int layer,
                  const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& input) {
  const auto& lp = CheckedLayer(params, layer, 3);
  CheckShapes(lp.gates[gate::kUpdate], h_prev, input);
  LayerStep s;
  s.z = Sigmoid(Apply(lp.gates[gate::kUpdate], h_prev, input));
  s.r = Sigmoid(Apply(lp.gates[gate::kReset], h_prev, input));
  const Eigen::MatrixXd gated = (s.r.array() * h_prev.array()).matrix();
  s.candidate = Tanh(Apply(lp.gates[gate::kGruCandidate], gated, input));
  s.h = ((1.0 - s.z.array()) * h_prev.array() +
         s.z.array() * s.candidate.array())
            .matrix();
  return s;
}

RecurrentState RecurrentState::Zeros(const ModelConfig& config, int batch) {
  RecurrentState s;
  s.h.assign(config.layers, Eigen::MatrixXd::Zero(config.hidden_size, batch));
  if (config.cell == CellType::kLstm) {
    s.c.assign(config.layers,
               Eigen::MatrixXd::Zero(config.hidden_size, batch));
  }
  return s;
}

std::vector<LayerStep> StepModel(const Parameters& params,
                                 const ModelConfig& config,
                                 const RecurrentState& prev,
                                 const Eigen::MatrixXd& input) {
  std::vector<LayerStep> out;
  out.reserve(config.layers);
  for (int l = 0; l < config.layers; ++l) {
    const Eigen::MatrixXd& x = l == 0 ? input : out.back().h;
    switch (config.cell) {
      case CellType::kRnn:
        out.push_back(StepRnn(params, l, prev.h[l], x));
        break;
      case CellType::kLstm:
        out.push_back(StepLstm(params, l, prev.h[l], prev.c[l], x,
                               config.standard_lstm_output));
        break;
      case CellType::kGru:
        out.push_back(StepGru(params, l, prev.h[l], x));
        break;
    }
  }
  return out;
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    out.col(b) = Softmax(logits.col(b));
  }
  return out;
}

Eigen::MatrixXd Embed(const Parameters& params, const std::vector<int>& ids) {
  Eigen::MatrixXd x(params.embedding.cols(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] < 0 || ids[b] >= params.embedding.rows()) {
      throw VocabularyMismatch("token id " + std::to_string(ids[b]) +
                               " outside vocabulary of size " +
                               std::to_string(params.embedding.rows()));
    }
    x.col(static_cast<Eigen::Index>(b)) = params.embedding.row(ids[b]).transpose();
  }
  return x;
}

SequenceOutput ForwardSequence(const Parameters& params,
                               const ModelConfig& config,
                               const TokenSequence& ids, bool record) {
  if (ids.empty()) throw InvalidArgument("empty sequence");
  SequenceOutput out;
  RecurrentState state = RecurrentState::Zeros(config, 1);
  const bool lm = config.scheme == Scheme::kLanguageModel;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto steps = StepModel(params, config, state, Embed(params, {ids[t]}));
    for (int l = 0; l < config.layers; ++l) {
      state.h[l] = steps[l].h;
      if (config.cell == CellType::kLstm) state.c[l] = steps[l].c;
    }
    const bool last = t + 1 == ids.size();
    if (lm || last) {
      Eigen::VectorXd logits = params.output * steps.back().h.col(0) +
                               params.output_bias.col(0);
      out.probabilities.push_back(Softmax(logits));
      out.logits.push_back(std::move(logits));
    }
    if (record || last) out.steps.push_back(std::move(steps));
  }
  return out;
}

}  // namespace rnnlens

#include "rnnlens/trainer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "rnnlens/error.h"

namespace rnnlens {

// ---------------------------------------------------------------------------
// Config and report plumbing

void TrainConfig::Validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(learning_rate > 0)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (!(lr_decay > 0 && lr_decay <= 1)) {
    throw ConfigError("train.lr_decay must be in (0, 1]");
  }
  if (!(clip_norm > 0)) throw ConfigError("train.clip_norm must be positive");
  if (bptt_steps < 1) throw ConfigError("train.bptt_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
}

Json TrainConfig::ToJson() const {
  return Json{{"epochs", epochs},         {"learning_rate", learning_rate},
              {"lr_decay", lr_decay},     {"clip_norm", clip_norm},
              {"bptt_steps", bptt_steps}, {"batch_size", batch_size},
              {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const Json& j) {
  constexpr std::string_view kCtx = "train";
  RequireKnownKeys(j,
                   {"epochs", "learning_rate", "lr_decay", "clip_norm",
                    "bptt_steps", "batch_size", "seed"},
                   kCtx);
  TrainConfig c;
  c.epochs = GetOr<int>(j, "epochs", c.epochs, kCtx);
  c.learning_rate = GetOr<double>(j, "learning_rate", c.learning_rate, kCtx);
  c.lr_decay = GetOr<double>(j, "lr_decay", c.lr_decay, kCtx);
  c.clip_norm = GetOr<double>(j, "clip_norm", c.clip_norm, kCtx);
  c.bptt_steps = GetOr<int>(j, "bptt_steps", c.bptt_steps, kCtx);
  c.batch_size = GetOr<int>(j, "batch_size", c.batch_size, kCtx);
  c.seed = GetOr<std::uint64_t>(j, "seed", c.seed, kCtx);
  c.Validate();
  return c;
}

Json TrainReport::ToJson() const {
  Json epochs_json = Json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"learning_rate", e.learning_rate},
                           {"train_loss", e.train_loss},
                           {"valid_metric", e.valid_metric}});
  }
  return Json{{"metric", metric},
              {"epochs", std::move(epochs_json)},
              {"final_valid", final_valid},
              {"final_test", final_test}};
}

bool TrainReport::operator==(const TrainReport& o) const {
  if (metric != o.metric || final_valid != o.final_valid ||
      final_test != o.final_test || epochs.size() != o.epochs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = o.epochs[i];
    if (a.epoch != b.epoch || a.learning_rate != b.learning_rate ||
        a.train_loss != b.train_loss || a.valid_metric != b.valid_metric) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward/backward over one T x B block

namespace {

using Eigen::MatrixXd;

// Inputs and optional targets laid out step-major: ids[t][b]. A target of -1
// means "no loss at this position".
struct Block {
  const std::vector<std::vector<int>>* inputs = nullptr;
  const std::vector<std::vector<int>>* targets = nullptr;
};

struct Tape {
  std::vector<MatrixXd> x;                     // per step, m x B
  std::vector<std::vector<LayerStep>> steps;   // per step, per layer
};

MatrixXd Dsigmoid(const MatrixXd& s) {
  return (s.array() * (1.0 - s.array())).matrix();
}

MatrixXd Dtanh(const MatrixXd& t) {
  return (1.0 - t.array().square()).matrix();
}

void AccumulateAffine(Affine& g, const MatrixXd& da, const MatrixXd& h_prev,
                      const MatrixXd& input) {
  g.recurrent.noalias() += da * h_prev.transpose();
  g.input.noalias() += da * input.transpose();
  g.bias.col(0) += da.rowwise().sum();
}

// Runs the block, returning the summed (unnormalized) cross-entropy over all
// positions with a target. When `grads` is non-null, accumulates
// d(scale * loss_sum)/dtheta into it.
double RunBlock(const Parameters& params, const ModelConfig& config,
                const Block& block, const RecurrentState& initial,
                double scale, Parameters* grads, RecurrentState* final_state) {
  const auto& inputs = *block.inputs;
  const auto& targets = *block.targets;
  const int T = static_cast<int>(inputs.size());
  const int L = config.layers;
  const bool lstm = config.cell == CellType::kLstm;
  const bool keep_tape = grads != nullptr;

  Tape tape;
  if (keep_tape) {
    tape.x.reserve(T);
    tape.steps.reserve(T);
  }
  RecurrentState state = initial;
  double loss = 0.0;
  // Output-layer gradients w.r.t. the top hidden state, per step.
  std::vector<MatrixXd> dtop(keep_tape ? T : 0);

  for (int t = 0; t < T; ++t) {
    MatrixXd x = Embed(params, inputs[t]);
    auto steps = StepModel(params, config, state, x);
    for (int l = 0; l < L; ++l) {
      state.h[l] = steps[l].h;
      if (lstm) state.c[l] = steps[l].c;
    }
    const auto& tgt = targets[t];
    const bool any_target =
        std::any_of(tgt.begin(), tgt.end(), [](int v) { return v >= 0; });
    if (any_target) {
      const MatrixXd& top = steps.back().h;
      MatrixXd logits = params.output * top;
      logits.colwise() += params.output_bias.col(0);
      MatrixXd dlogits;
      if (keep_tape) dlogits = MatrixXd::Zero(logits.rows(), logits.cols());
      for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        const int y = tgt[static_cast<std::size_t>(b)];
        if (y < 0) continue;
        if (y >= logits.rows()) {
          throw VocabularyMismatch("target id " + std::to_string(y) +
                                   " outside " +
                                   std::to_string(logits.rows()) + " classes");
        }
        const double mx = logits.col(b).maxCoeff();
        const Eigen::ArrayXd e = (logits.col(b).array() - mx).exp();
        const double sum = e.sum();
        loss += std::log(sum) + mx - logits(y, b);
        if (keep_tape) {
          dlogits.col(b) = (e / sum).matrix() * scale;
          dlogits(y, b) -= scale;
        }
      }
      if (keep_tape) {
        grads->output.noalias() += dlogits * top.transpose();
        grads->output_bias.col(0) += dlogits.rowwise().sum();
        dtop[t] = params.output.transpose() * dlogits;
      }
    }
    if (keep_tape) {
      tape.x.push_back(std::move(x));
      tape.steps.push_back(std::move(steps));
    }
  }
  if (final_state) *final_state = state;
  if (!keep_tape) return loss;

  const int B = static_cast<int>(inputs.empty() ? 0 : inputs[0].size());
  const int n = config.hidden_size;
  std::vector<MatrixXd> dh_next(L, MatrixXd::Zero(n, B));
  std::vector<MatrixXd> dc_next(lstm ? L : 0, MatrixXd::Zero(n, B));

  for (int t = T - 1; t >= 0; --t) {
    MatrixXd dfrom_above;  // gradient w.r.t. this layer's output from layer+1
    for (int l = L - 1; l >= 0; --l) {
      const LayerStep& s = tape.steps[t][l];
      const MatrixXd& h_prev = t > 0 ? tape.steps[t - 1][l].h : initial.h[l];
      const MatrixXd& in = l == 0 ? tape.x[t] : tape.steps[t][l - 1].h;
      MatrixXd dh = dh_next[l];
      if (l == L - 1) {
        if (dtop[t].size() > 0) dh += dtop[t];
      } else {
        dh += dfrom_above;
      }
      auto& lp = params.layers[l];
      auto& lg = grads->layers[l];
      MatrixXd dx;
      switch (config.cell) {
        case CellType::kRnn: {
          MatrixXd da = (dh.array() * Dtanh(s.h).array()).matrix();
          AccumulateAffine(lg.gates[gate::kRnn], da, h_prev, in);
          dh_next[l] = lp.gates[gate::kRnn].recurrent.transpose() * da;
          dx = lp.gates[gate::kRnn].input.transpose() * da;
          break;
        }
        case CellType::kLstm: {
          const MatrixXd& c_prev =
              t > 0 ? tape.steps[t - 1][l].c : initial.c[l];
          MatrixXd dc = dc_next[l];
          MatrixXd d_o;
          if (config.standard_lstm_output) {
            const Eigen::ArrayXXd tc = s.c.array().tanh();
            d_o = (dh.array() * tc).matrix();
            dc.array() += dh.array() * s.o.array() * (1.0 - tc.square());
          } else {
            d_o = (dh.array() * s.c.array()).matrix();
            dc.array() += dh.array() * s.o.array();
          }
          const MatrixXd da_i =
              (dc.array() * s.candidate.array() * Dsigmoid(s.i).array())
                  .matrix();
          const MatrixXd da_f =
              (dc.array() * c_prev.array() * Dsigmoid(s.f).array()).matrix();
          const MatrixXd da_o = (d_o.array() * Dsigmoid(s.o).array()).matrix();
          const MatrixXd da_c =
              (dc.array() * s.i.array() * Dtanh(s.candidate).array())
                  .matrix();
          dc_next[l] = (dc.array() * s.f.array()).matrix();
          AccumulateAffine(lg.gates[gate::kInput], da_i, h_prev, in);
          AccumulateAffine(lg.gates[gate::kForget], da_f, h_prev, in);
          AccumulateAffine(lg.gates[gate::kOutput], da_o, h_prev, in);
          AccumulateAffine(lg.gates[gate::kCandidate], da_c, h_prev, in);
          MatrixXd dhp = lp.gates[gate::kInput].recurrent.transpose() * da_i;
          dhp.noalias() += lp.gates[gate::kForget].recurrent.transpose() * da_f;
          dhp.noalias() += lp.gates[gate::kOutput].recurrent.transpose() * da_o;
          dhp.noalias() +=
              lp.gates[gate::kCandidate].recurrent.transpose() * da_c;
          dh_next[l] = std::move(dhp);
          dx = lp.gates[gate::kInput].input.transpose() * da_i;
          dx.noalias() += lp.gates[gate::kForget].input.transpose() * da_f;
          dx.noalias() += lp.gates[gate::kOutput].input.transpose() * da_o;
          dx.noalias() += lp.gates[gate::kCandidate].input.transpose() * da_c;
          break;
        }
        case CellType::kGru: {
          const MatrixXd dz =
              (dh.array() * (s.candidate.array() - h_prev.array())).matrix();
          const MatrixXd dcand = (dh.array() * s.z.array()).matrix();
          MatrixXd dhp = (dh.array() * (1.0 - s.z.array())).matrix();
          const MatrixXd da_h =
              (dcand.array() * Dtanh(s.candidate).array()).matrix();
          const MatrixXd gated = (s.r.array() * h_prev.array()).matrix();
          AccumulateAffine(lg.gates[gate::kGruCandidate], da_h, gated, in);
          const MatrixXd dgated =
              lp.gates[gate::kGruCandidate].recurrent.transpose() * da_h;
          const MatrixXd dr = (dgated.array() * h_prev.array()).matrix();
          dhp.array() += dgated.array() * s.r.array();
          const MatrixXd da_z = (dz.array() * Dsigmoid(s.z).array()).matrix();
          const MatrixXd da_r = (dr.array() * Dsigmoid(s.r).array()).matrix();
          AccumulateAffine(lg.gates[gate::kUpdate], da_z, h_prev, in);
          AccumulateAffine(lg.gates[gate::kReset], da_r, h_prev, in);
          dhp.noalias() += lp.gates[gate::kUpdate].recurrent.transpose() * da_z;
          dhp.noalias() += lp.gates[gate::kReset].recurrent.transpose() * da_r;
          dh_next[l] = std::move(dhp);
          dx = lp.gates[gate::kUpdate].input.transpose() * da_z;
          dx.noalias() += lp.gates[gate::kReset].input.transpose() * da_r;
          dx.noalias() += lp.gates[gate::kGruCandidate].input.transpose() * da_h;
          break;
        }
      }
      if (l == 0) {
        const auto& ids = inputs[t];
        for (int b = 0; b < B; ++b) {
          grads->embedding.row(ids[b]) += dx.col(b).transpose();
        }
      } else {
        dfrom_above = std::move(dx);
      }
    }
  }
  return loss;
}

std::size_t CountTargets(const std::vector<std::vector<int>>& targets) {
  std::size_t n = 0;
  for (const auto& row : targets) {
    for (int v : row) n += v >= 0 ? 1 : 0;
  }
  return n;
}

void CheckLmBatch(const LmBatch& batch) {
  if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size()) {
    throw InvalidArgument("language-model batch needs matching inputs/targets");
  }
  const std::size_t width = batch.inputs[0].size();
  for (std::size_t t = 0; t < batch.inputs.size(); ++t) {
    if (batch.inputs[t].size() != width || batch.targets[t].size() != width) {
      throw InvalidArgument("language-model batch is ragged");
    }
  }
}

// Groups classification sequences by length so each group runs as one
// T x B block with a target only at the final step.
struct ClassificationGroup {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets;
};

std::vector<ClassificationGroup> GroupByLength(const ClassificationBatch& b) {
  if (b.sequences.empty() || b.sequences.size() != b.labels.size()) {
    throw InvalidArgument(
        "classification batch needs one label per sequence and at least one "
        "sequence");
  }
  std::map<std::size_t, std::vector<std::size_t>> by_len;
  for (std::size_t i = 0; i < b.sequences.size(); ++i) {
    if (b.sequences[i].empty()) throw InvalidArgument("empty sequence");
    by_len[b.sequences[i].size()].push_back(i);
  }
  std::vector<ClassificationGroup> groups;
  for (const auto& [len, members] : by_len) {
    ClassificationGroup g;
    g.inputs.assign(len, std::vector<int>(members.size()));
    g.targets.assign(len, std::vector<int>(members.size(), -1));
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& seq = b.sequences[members[k]];
      for (std::size_t t = 0; t < len; ++t) g.inputs[t][k] = seq[t];
      g.targets[len - 1][k] = b.labels[members[k]];
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

GradientResult Run(const Parameters& params, const ModelConfig& config,
                   const Batch& batch, double loss_scale, bool want_grads) {
  GradientResult result;
  if (want_grads) result.grads = Parameters::Zeros(config);
  Parameters* grads = want_grads ? &result.grads : nullptr;

  if (const auto* lm = std::get_if<LmBatch>(&batch)) {
    CheckLmBatch(*lm);
    const double count = static_cast<double>(CountTargets(lm->targets));
    if (count == 0) throw InvalidArgument("language-model batch has no targets");
    const int width = static_cast<int>(lm->inputs[0].size());
    RecurrentState initial = lm->initial.h.empty()
                                 ? RecurrentState::Zeros(config, width)
                                 : lm->initial;
    Block block{&lm->inputs, &lm->targets};
    const double sum = RunBlock(params, config, block, initial,
                                loss_scale / count, grads, &result.final_state);
    result.loss = sum / count;
  } else {
    const auto& cls = std::get<ClassificationBatch>(batch);
    auto groups = GroupByLength(cls);
    const double count = static_cast<double>(cls.sequences.size());
    double sum = 0.0;
    for (const auto& g : groups) {
      Block block{&g.inputs, &g.targets};
      RecurrentState initial =
          RecurrentState::Zeros(config, static_cast<int>(g.inputs[0].size()));
      sum += RunBlock(params, config, block, initial, loss_scale / count,
                      grads, nullptr);
    }
    result.loss = sum / count;
  }
  if (want_grads && !config.use_bias) {
    result.grads.ForEach(config, [](const std::string& name,
                                    Eigen::MatrixXd& t) {
      if (IsBiasTensor(name)) t.setZero();
    });
  }
  return result;
}

}  // namespace

GradientResult ComputeGradients(const Parameters& params,
                                const ModelConfig& config, const Batch& batch,
                                double loss_scale) {
  return Run(params, config, batch, loss_scale, true);
}

double ComputeLoss(const Parameters& params, const ModelConfig& config,
                   const Batch& batch) {
  return Run(params, config, batch, 1.0, false).loss;
}

double GlobalNorm(const Parameters& grads, const ModelConfig& config) {
  double sq = 0.0;
  grads.ForEach(config, [&](const std::string&, const Eigen::MatrixXd& t) {
    sq += t.squaredNorm();
  });
  return std::sqrt(sq);
}

double ClipGlobalNorm(Parameters& grads, const ModelConfig& config,
                      double clip_norm) {
  const double norm = GlobalNorm(grads, config);
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    grads.ForEach(config, [&](const std::string&, Eigen::MatrixXd& t) {
      t *= factor;
    });
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Metrics

double Perplexity(const Parameters& params, const ModelConfig& config,
                  const std::vector<TokenSequence>& split) {
  if (config.scheme != Scheme::kLanguageModel) {
    throw InvalidArgument("perplexity requires a language model");
  }
  std::vector<int> stream;
  for (const auto& seq : split) stream.insert(stream.end(), seq.begin(), seq.end());
  if (stream.size() < 2) throw InvalidArgument("empty split");

  // One column, windows of 64 steps, state carried across windows.
  constexpr std::size_t kWindow = 64;
  RecurrentState state = RecurrentState::Zeros(config, 1);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start + 1 < stream.size(); start += kWindow) {
    const std::size_t end = std::min(stream.size() - 1, start + kWindow);
    std::vector<std::vector<int>> inputs, targets;
    for (std::size_t t = start; t < end; ++t) {
      inputs.push_back({stream[t]});
      targets.push_back({stream[t + 1]});
    }
    Block block{&inputs, &targets};
    RecurrentState next;
    sum += RunBlock(params, config, block, state, 1.0, nullptr, &next);
    count += end - start;
    state = std::move(next);
  }
  return std::exp(sum / static_cast<double>(count));
}

namespace {

int Predict(const Parameters& params, const ModelConfig& config,
            const TokenSequence& seq) {
  auto out = ForwardSequence(params, config, seq, false);
  Eigen::Index best = 0;
  out.logits.back().maxCoeff(&best);
  return static_cast<int>(best);
}

void CheckClassificationSplit(const ModelConfig& config,
                              const std::vector<TokenSequence>& split,
                              const std::vector<int>& labels) {
  if (config.scheme != Scheme::kSequenceClassification) {
    throw InvalidArgument("accuracy requires a classification model");
  }
  if (split.empty()) throw InvalidArgument("empty split");
  if (split.size() != labels.size()) {
    throw InvalidArgument("split and labels differ in length");
  }
}

}  // namespace

double Accuracy(const Parameters& params, const ModelConfig& config,
                const std::vector<TokenSequence>& split,
                const std::vector<int>& labels) {
  CheckClassificationSplit(config, split, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    correct += Predict(params, config, split[i]) == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

double ClassRecall(const Parameters& params, const ModelConfig& config,
                   const std::vector<TokenSequence>& split,
                   const std::vector<int>& labels, int cls) {
  CheckClassificationSplit(config, split, labels);
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (labels[i] != cls) continue;
    ++total;
    correct += Predict(params, config, split[i]) == cls ? 1 : 0;
  }
  if (total == 0) throw InvalidArgument("no sequences with the given label");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Training

std::vector<LmBatch> MakeLmWindows(const std::vector<TokenSequence>& split,
                                   int batch_size, int bptt_steps) {
  std::vector<int> stream;
  for (const auto& seq : split) stream.insert(stream.end(), seq.begin(), seq.end());
  const std::size_t B = static_cast<std::size_t>(batch_size);
  const std::size_t per_stream = stream.size() / B;
  if (per_stream < 2) {
    throw InvalidArgument("training split too small for the batch size");
  }
  std::vector<LmBatch> windows;
  for (std::size_t start = 0; start + 1 < per_stream;
       start += static_cast<std::size_t>(bptt_steps)) {
    const std::size_t end =
        std::min(per_stream - 1, start + static_cast<std::size_t>(bptt_steps));
    LmBatch w;
    for (std::size_t t = start; t < end; ++t) {
      std::vector<int> in(B), tg(B);
      for (std::size_t b = 0; b < B; ++b) {
        in[b] = stream[b * per_stream + t];
        tg[b] = stream[b * per_stream + t + 1];
      }
      w.inputs.push_back(std::move(in));
      w.targets.push_back(std::move(tg));
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

namespace {

void SgdUpdate(Parameters& params, const Parameters& grads,
               const ModelConfig& config, double lr) {
  std::vector<const Eigen::MatrixXd*> g;
  grads.ForEach(config, [&](const std::string&, const Eigen::MatrixXd& t) {
    g.push_back(&t);
  });
  std::size_t k = 0;
  params.ForEach(config, [&](const std::string&, Eigen::MatrixXd& t) {
    t.noalias() -= lr * *g[k++];
  });
}

[[noreturn]] void Diverged(int epoch, std::size_t step, double loss) {
  throw TrainingDiverged("training diverged at epoch " +
                         std::to_string(epoch) + ", step " +
                         std::to_string(step) + " (loss " +
                         std::to_string(loss) + ")");
}

}  // namespace

TrainReport Train(ModelCheckpoint& checkpoint, const Dataset& dataset,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  const ModelConfig& mc = checkpoint.config;
  mc.Validate();
  if (mc.scheme != dataset.scheme) {
    throw ConfigError("dataset scheme does not match the model scheme");
  }
  if (mc.vocab_size != dataset.vocabulary.size()) {
    throw ConfigError("model vocab_size does not match the dataset vocabulary");
  }
  if (dataset.train.empty()) throw InvalidArgument("empty training split");

  const bool lm = mc.scheme == Scheme::kLanguageModel;
  TrainReport report;
  report.metric = lm ? "perplexity" : "accuracy";
  auto metric = [&](std::string_view split) {
    const auto& seqs = dataset.Split(split);
    if (seqs.empty()) return std::nan("");
    return lm ? Perplexity(checkpoint.params, mc, seqs)
              : Accuracy(checkpoint.params, mc, seqs, dataset.Labels(split));
  };

  std::mt19937_64 rng(config.seed);
  std::vector<LmBatch> windows;
  if (lm) windows = MakeLmWindows(dataset.train, config.batch_size,
                                  config.bptt_steps);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = config.learning_rate;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    std::size_t step = 0;
    if (lm) {
      RecurrentState state = RecurrentState::Zeros(mc, config.batch_size);
      for (auto& w : windows) {
        w.initial = state;
        auto res = ComputeGradients(checkpoint.params, mc, w);
        ++step;
        if (!std::isfinite(res.loss)) Diverged(epoch, step, res.loss);
        ClipGlobalNorm(res.grads, mc, config.clip_norm);
        SgdUpdate(checkpoint.params, res.grads, mc, lr);
        const double weight = static_cast<double>(w.inputs.size());
        loss_sum += res.loss * weight;
        weight_sum += weight;
        state = std::move(res.final_state);
      }
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(
            order.size(), start + static_cast<std::size_t>(config.batch_size));
        ClassificationBatch b;
        for (std::size_t k = start; k < end; ++k) {
          b.sequences.push_back(dataset.train[order[k]]);
          b.labels.push_back(dataset.train_labels[order[k]]);
        }
        auto res = ComputeGradients(checkpoint.params, mc, b);
        ++step;
        if (!std::isfinite(res.loss)) Diverged(epoch, step, res.loss);
        ClipGlobalNorm(res.grads, mc, config.clip_norm);
        SgdUpdate(checkpoint.params, res.grads, mc, lr);
        const double weight = static_cast<double>(end - start);
        loss_sum += res.loss * weight;
        weight_sum += weight;
      }
    }
    if (!checkpoint.params.AllFinite()) Diverged(epoch, step, loss_sum);
    EpochStats stats{epoch, lr, loss_sum / weight_sum, metric("valid")};
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
    lr *= config.lr_decay;
  }
  report.final_valid = metric("valid");
  report.final_test = metric("test");

  auto& md = checkpoint.metadata;
  md.epochs += config.epochs;
  md.seed = config.seed;
  md.final_metrics.clear();
  if (std::isfinite(report.final_valid)) {
    md.final_metrics["valid_" + report.metric] = report.final_valid;
  }
  if (std::isfinite(report.final_test)) {
    md.final_metrics["test_" + report.metric] = report.final_test;
  }
  md.train_report = report.ToJson();
  return report;
}

}  // namespace rnnlens

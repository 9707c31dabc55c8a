#include "rnnlens/seqprofile.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rnnlens/error.h"
#include "rnnlens/evaluator.h"

namespace rnnlens {

namespace {

void CheckAssignment(Eigen::Index dim, const std::vector<int>& assignment,
                     int k) {
  if (k < 1) throw InvalidArgument("cluster count must be >= 1");
  if (static_cast<Eigen::Index>(assignment.size()) != dim) {
    throw InvalidArgument("unit assignment covers " +
                          std::to_string(assignment.size()) +
                          " units, state has " + std::to_string(dim));
  }
  for (int a : assignment) {
    if (a < 0 || a >= k) {
      throw InvalidArgument("unit cluster " + std::to_string(a) +
                            " outside [0, " + std::to_string(k) + ")");
    }
  }
}

std::vector<TokenScore> TopK(const Eigen::VectorXd& probs,
                             const Vocabulary& vocab, int count) {
  std::vector<int> order(static_cast<std::size_t>(probs.size()));
  std::iota(order.begin(), order.end(), 0);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(count),
                                       order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(n),
                    order.end(), [&](int a, int b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  std::vector<TokenScore> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({order[i], vocab.Token(order[i]), probs[order[i]]});
  }
  return out;
}

Json InfoJson(const AggregateInfo& info, bool display) {
  return Json{{"positive", VectorToJson(info.positive, display)},
              {"negative", VectorToJson(info.negative, display)}};
}

}  // namespace

AggregateInfo ComputeAggregateInfo(const Eigen::VectorXd& state,
                                   const std::vector<int>& unit_assignment,
                                   int k) {
  CheckAssignment(state.size(), unit_assignment, k);
  AggregateInfo info{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    const double v = state[j];
    if (v > 0) {
      info.positive[unit_assignment[j]] += v;
    } else if (v < 0) {
      info.negative[unit_assignment[j]] += v;
    }
  }
  return info;
}

AggregateInfo ComputeUpdatedInfo(const AggregateInfo& previous,
                                 const AggregateInfo& current) {
  if (previous.positive.size() != current.positive.size()) {
    throw ShapeError("aggregate info cluster counts differ");
  }
  return {current.positive - previous.positive,
          current.negative - previous.negative};
}

Eigen::VectorXd ComputePreservedInfo(const Eigen::VectorXd& previous,
                                     const Eigen::VectorXd& current,
                                     const std::vector<int>& unit_assignment,
                                     int k, const Eigen::VectorXd* gates) {
  if (previous.size() != current.size()) {
    throw ShapeError("previous and current states differ in length");
  }
  if (gates && gates->size() != previous.size()) {
    throw ShapeError("gate vector length differs from the state");
  }
  CheckAssignment(previous.size(), unit_assignment, k);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (Eigen::Index j = 0; j < previous.size(); ++j) {
    const double prev = previous[j];
    if (prev == 0.0) continue;
    double kept;
    if (gates) {
      kept = (*gates)[j];
    } else {
      kept = std::clamp(current[j] / prev, 0.0, 1.0);
    }
    beta[unit_assignment[j]] += std::abs(prev) * kept;
  }
  return beta;
}

SequenceProfile ProfileSequence(const ModelCheckpoint& model,
                                const std::vector<int>& unit_assignment, int k,
                                const TokenSequence& ids, int layer,
                                StateKind kind, bool use_gates) {
  const ModelConfig& cfg = model.config;
  if (ids.empty()) throw InvalidArgument("empty sequence");
  if (layer < 0 || layer >= cfg.layers) {
    throw InvalidArgument("layer " + std::to_string(layer) + " out of range");
  }
  if (kind == StateKind::kCell && cfg.cell != CellType::kLstm) {
    throw InvalidArgument("only LSTMs have a cell state");
  }
  CheckAssignment(cfg.hidden_size, unit_assignment, k);
  for (int id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw VocabularyMismatch("token id " + std::to_string(id) +
                               " does not belong to the model vocabulary");
    }
  }

  SequenceProfile profile;
  profile.k = k;
  profile.layer = layer;
  profile.state_kind = kind;
  profile.gated = use_gates && ((cfg.cell == CellType::kLstm &&
                                 kind == StateKind::kCell) ||
                                cfg.cell == CellType::kGru);
  profile.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int a : unit_assignment) ++profile.cluster_sizes[a];

  const SequenceOutput out = model.Forward(ids, /*record=*/true);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(cfg.hidden_size);
  AggregateInfo prev_info{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const LayerStep& step = out.steps[t][layer];
    const Eigen::VectorXd cur = SelectState(step, cfg.cell, kind).col(0);
    ProfileStep s;
    s.word = ids[t];
    s.text = model.vocabulary.Token(ids[t]);
    s.aggregate = ComputeAggregateInfo(cur, unit_assignment, k);
    s.updated = ComputeUpdatedInfo(prev_info, s.aggregate);
    if (profile.gated) {
      const Eigen::VectorXd gate = cfg.cell == CellType::kLstm
                                       ? Eigen::VectorXd(step.f.col(0))
                                       : Eigen::VectorXd(1.0 - step.z.col(0).array());
      s.preserved = ComputePreservedInfo(prev, cur, unit_assignment, k, &gate);
    } else {
      s.preserved = ComputePreservedInfo(prev, cur, unit_assignment, k);
    }
    s.preserved_ratio.resize(k);
    s.ratio_undefined.assign(static_cast<std::size_t>(k), false);
    s.link_strength.resize(k);
    s.link_sign.resize(k);
    for (int i = 0; i < k; ++i) {
      const double denom = s.aggregate.positive[i] - s.aggregate.negative[i];
      if (denom > 0.0) {
        s.preserved_ratio[i] = std::clamp(s.preserved[i] / denom, 0.0, 1.0);
      } else {
        s.preserved_ratio[i] = 1.0;
        s.ratio_undefined[i] = true;
      }
      const double net = s.updated.positive[i] + s.updated.negative[i];
      const int size = profile.cluster_sizes[i];
      s.link_strength[i] = size > 0 ? std::abs(net) / size : 0.0;
      s.link_sign[i] = net > 0 ? 1.0 : (net < 0 ? -1.0 : 0.0);
    }
    if (cfg.scheme == Scheme::kLanguageModel) {
      s.top_predictions = TopK(out.probabilities[t], model.vocabulary,
                               kTopPredictions);
    }
    profile.steps.push_back(std::move(s));
    prev = cur;
    prev_info = profile.steps.back().aggregate;
  }
  if (cfg.scheme == Scheme::kSequenceClassification) {
    profile.final_probabilities = out.probabilities.back();
  }
  return profile;
}

Json SequenceProfile::ToJson(bool display) const {
  Json steps_json = Json::array();
  for (const ProfileStep& s : steps) {
    Json preds = Json::array();
    for (const TokenScore& p : s.top_predictions) {
      preds.push_back({{"word", p.word},
                       {"text", p.text},
                       {"probability",
                        display ? RoundSignificant(p.probability)
                                : p.probability}});
    }
    steps_json.push_back({{"word", s.word},
                          {"text", s.text},
                          {"aggregate", InfoJson(s.aggregate, display)},
                          {"updated", InfoJson(s.updated, display)},
                          {"preserved", VectorToJson(s.preserved, display)},
                          {"preserved_ratio",
                           VectorToJson(s.preserved_ratio, display)},
                          {"ratio_undefined", s.ratio_undefined},
                          {"link_strength",
                           VectorToJson(s.link_strength, display)},
                          {"link_sign", VectorToJson(s.link_sign, display)},
                          {"top_predictions", std::move(preds)}});
  }
  Json j{{"k", k},
         {"layer", layer},
         {"state_kind", StateKindName(state_kind)},
         {"gated", gated},
         {"cluster_sizes", cluster_sizes},
         {"steps", std::move(steps_json)}};
  if (final_probabilities.size() > 0) {
    j["final_probabilities"] = VectorToJson(final_probabilities, display);
  } else {
    j["final_probabilities"] = nullptr;
  }
  return j;
}

}  // namespace rnnlens

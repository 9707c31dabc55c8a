#ifndef RNNLENS_SEQPROFILE_H_
#define RNNLENS_SEQPROFILE_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnnlens/models.h"

namespace rnnlens {

// Per-cluster sums of the positive and of the negative state components.
struct AggregateInfo {
  Eigen::VectorXd positive;  // >= 0
  Eigen::VectorXd negative;  // <= 0
};

// `unit_assignment[j]` is the cluster of unit j, in [0, k).
AggregateInfo ComputeAggregateInfo(const Eigen::VectorXd& state,
                                   const std::vector<int>& unit_assignment,
                                   int k);

// Componentwise current - previous.
AggregateInfo ComputeUpdatedInfo(const AggregateInfo& previous,
                                 const AggregateInfo& current);

// Magnitude of the previous state retained in each cluster. Without gates
// every unit keeps |prev| * clamp(curr / prev, 0, 1) (0 when prev is 0); with
// gates it keeps |prev| * gate.
Eigen::VectorXd ComputePreservedInfo(const Eigen::VectorXd& previous,
                                     const Eigen::VectorXd& current,
                                     const std::vector<int>& unit_assignment,
                                     int k,
                                     const Eigen::VectorXd* gates = nullptr);

struct TokenScore {
  int word = 0;
  std::string text;
  double probability = 0.0;
};

struct ProfileStep {
  int word = 0;
  std::string text;
  AggregateInfo aggregate;
  AggregateInfo updated;
  Eigen::VectorXd preserved;
  // preserved / (positive - negative), clamped to [0, 1]; 1 where the
  // denominator is 0, and then `ratio_undefined` is set.
  Eigen::VectorXd preserved_ratio;
  std::vector<bool> ratio_undefined;
  // |updated.positive + updated.negative| / cluster size, and its sign.
  Eigen::VectorXd link_strength;
  Eigen::VectorXd link_sign;
  // Language models only: the five most likely next words.
  std::vector<TokenScore> top_predictions;
};

struct SequenceProfile {
  int k = 0;
  int layer = 0;
  StateKind state_kind = StateKind::kHidden;
  // True when preserved information comes from the cell's gates.
  bool gated = false;
  std::vector<int> cluster_sizes;
  std::vector<ProfileStep> steps;
  // Classification only: class probabilities after the last word.
  Eigen::VectorXd final_probabilities;

  Json ToJson(bool display_precision) const;
};

inline constexpr int kTopPredictions = 5;

// Runs the model over `ids` and measures every cluster at every step. Gates
// are used for lstm cell states (forget gate) and gru hidden states
// (1 - update gate) when `use_gates` is set. Throws InvalidArgument for an
// empty sequence or an assignment that does not cover the state.
SequenceProfile ProfileSequence(const ModelCheckpoint& model,
                                const std::vector<int>& unit_assignment, int k,
                                const TokenSequence& ids, int layer,
                                StateKind kind, bool use_gates = true);

}  // namespace rnnlens

#endif  // RNNLENS_SEQPROFILE_H_

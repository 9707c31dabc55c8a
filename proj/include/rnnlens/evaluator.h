#ifndef RNNLENS_EVALUATOR_H_
#define RNNLENS_EVALUATOR_H_

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnnlens/models.h"

namespace rnnlens {

inline constexpr std::size_t kDefaultSampleCapacity = 4096;
inline constexpr int kDefaultMinCount = 5;

// Per-word observations of state updates (delta = state(t) - state(t-1),
// state(0) = 0) for one layer and state kind. Means are exact via running
// sums; percentiles come from the stored samples, which are complete up to
// `sample_capacity` observations per word and a seeded reservoir beyond.
class ResponseRecord {
 public:
  ResponseRecord() = default;
  ResponseRecord(int dim, int layer, StateKind kind, std::uint64_t seed = 0,
                 std::size_t sample_capacity = kDefaultSampleCapacity);

  void Add(int word, const Eigen::VectorXd& delta);

  // Associative merge of a partial record over a disjoint corpus shard.
  void Merge(const ResponseRecord& other);

  int dim() const { return dim_; }
  int layer() const { return layer_; }
  StateKind state_kind() const { return kind_; }
  std::size_t sample_capacity() const { return capacity_; }

  bool Has(int word) const { return entries_.contains(word); }
  std::int64_t Count(int word) const;
  const Eigen::VectorXd& Sum(int word) const;
  // Stored samples of one word as an (stored x dim) matrix.
  Eigen::MatrixXd Samples(int word) const;
  // Observed word ids in ascending order.
  std::vector<int> Words() const;
  std::size_t WordCount() const { return entries_.size(); }

  // Full-precision cache representation.
  Json ToJson() const;
  static ResponseRecord FromJson(const Json& j);

 private:
  struct Entry {
    std::int64_t count = 0;
    Eigen::VectorXd sum;
    // Row-major samples, stored = samples.size() / dim.
    std::vector<double> samples;
  };

  const Entry& At(int word) const;
  void PushSample(Entry& e, const double* row);

  int dim_ = 0;
  int layer_ = 0;
  StateKind kind_ = StateKind::kHidden;
  std::size_t capacity_ = kDefaultSampleCapacity;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  std::map<int, Entry> entries_;
};

// Extracts the requested state (h or c) of `layer` from a recorded step.
const Eigen::MatrixXd& SelectState(const LayerStep& step, CellType cell,
                                   StateKind kind);

// Runs every sequence from the zero state and accumulates the per-step state
// deltas under the input word. Throws VocabularyMismatch for ids >= V.
ResponseRecord RecordResponses(const ModelCheckpoint& model,
                               const std::vector<TokenSequence>& sequences,
                               int layer, StateKind kind,
                               std::uint64_t seed = 0);

struct ExpectedResponse {
  int word = 0;
  Eigen::VectorXd mean;
  std::int64_t count = 0;
};

// Mean of the observed deltas. Throws NoObservations.
ExpectedResponse ComputeExpectedResponse(const ResponseRecord& record,
                                         int word);

inline constexpr std::array<double, 5> kPercentileLevels = {9, 25, 50, 75, 91};

struct ResponseDistribution {
  int word = 0;
  std::int64_t count = 0;
  // percentiles[k][j]: level kPercentileLevels[k] of dimension j.
  std::array<Eigen::VectorXd, 5> percentiles;
};

// Linear-interpolation percentile of sorted data, q in [0, 100].
double Percentile(const std::vector<double>& sorted, double q);

ResponseDistribution ComputeResponseDistribution(const ResponseRecord& record,
                                                 int word);

// Ascending order of the response, ties by dimension index.
std::vector<int> SortDimensions(const Eigen::VectorXd& response);

struct PredictionDecomposition {
  // u_i . delta_h(t) for t = 1..T.
  std::vector<double> log_factors;
  // exp of the above: multiplicative contribution of word t.
  std::vector<double> factors;
  // u_i . h(T).
  double final_logit_term = 0.0;
};

// Splits exp(u_i . h(T)) into per-word factors for a classifier.
PredictionDecomposition DecomposePrediction(const ModelCheckpoint& model,
                                            const TokenSequence& ids,
                                            int cls);

struct UnitWord {
  int word = 0;
  double response = 0.0;
  std::int64_t count = 0;
};

// Words with the m largest |mean_j|; ties by count (desc) then token text.
// Words with fewer than min_count observations are skipped.
std::vector<UnitWord> TopWordsForUnit(const ResponseRecord& record,
                                      const Vocabulary& vocabulary, int unit,
                                      int m, int min_count = kDefaultMinCount);

}  // namespace rnnlens

#endif  // RNNLENS_EVALUATOR_H_

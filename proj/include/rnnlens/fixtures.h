#ifndef RNNLENS_FIXTURES_H_
#define RNNLENS_FIXTURES_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnnlens/corpus.h"

namespace rnnlens {

// Platform-independent uniform draws on top of mt19937_64 (the standard
// distributions are allowed to differ between library implementations).
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, 1).
  double Uniform();
  // Uniform integer in [lo, hi].
  int Between(int lo, int hi);
  // Index drawn with probability proportional to `weights`.
  std::size_t Weighted(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

struct SentimentSpec {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> filler;
  // Mild words shared by both classes; a lukewarm sequence carries one or
  // two of these and no keyword.
  std::vector<std::string> lukewarm;
  double negative_lukewarm_rate = 0.3;
  double positive_lukewarm_rate = 0.15;
  int min_length = 8;
  int max_length = 16;
  int count = 4000;
  // Positive sequences per negative one (3 gives 3:1, 1 gives 1:1).
  double class_ratio = 3.0;
  std::uint64_t seed = 0;
};

// Restaurant-review style keyword sets with the given ratio and seed.
SentimentSpec DefaultSentimentSpec(double class_ratio, std::uint64_t seed);

// Label 1 is positive, 0 negative. A non-lukewarm negative holds one
// negative keyword and, half the time, a positive one; a non-lukewarm
// positive holds one or two positive keywords. Lukewarm sequences occur at
// the per-class rates. The class split is exact:
// round(count * ratio / (ratio + 1)) positives.
std::vector<RawExample> GenerateSentiment(const SentimentSpec& spec);

// `text<TAB>label` lines.
std::string FormatLabeledCorpus(const std::vector<RawExample>& examples);

struct PlantedBipartite {
  Eigen::MatrixXd weights;
  std::vector<int> row_labels;
  std::vector<int> col_labels;
};

// Block-diagonal matrix of ones with contiguous, near-equal blocks, plus
// uniform [0, noise) entries everywhere.
PlantedBipartite GeneratePlantedBipartite(int rows, int cols, int blocks,
                                          double noise, std::uint64_t seed);

// English-like newswire sentences from a small grammar, one per line, until
// at least `min_tokens` tokens (punctuation included) have been produced.
std::string GenerateToyCorpus(int min_tokens, std::uint64_t seed);

// word<TAB>TAG lines covering every word the toy grammar can emit.
std::string ToyPosLexicon();

}  // namespace rnnlens

#endif  // RNNLENS_FIXTURES_H_

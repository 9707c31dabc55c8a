#ifndef RNNLENS_COCLUSTER_H_
#define RNNLENS_COCLUSTER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rnnlens/corpus.h"
#include "rnnlens/evaluator.h"

namespace rnnlens {

// Words x hidden units, weighted by expected responses.
struct BipartiteGraph {
  std::vector<int> words;  // word ids, one per row
  std::vector<int> units;  // unit indices, one per column
  Eigen::MatrixXd weights;
};

// One row per word with at least `min_count` observations (ascending id).
// Throws InvalidArgument when no word qualifies.
BipartiteGraph BuildBipartite(const ResponseRecord& record,
                              int min_count = kDefaultMinCount);

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;  // k x d
  double objective = 0.0;     // sum of squared distances
  // Objective after every Lloyd iteration of the kept run (first entry:
  // after seeding).
  std::vector<double> objective_history;
  int iterations = 0;
};

inline constexpr int kKMeansMaxIterations = 300;
inline constexpr int kKMeansRestarts = 10;

// Lloyd's algorithm with k-means++ seeding, best of `restarts` seeded runs.
// Points are rows.
KMeansResult KMeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iterations = kKMeansMaxIterations,
                    int restarts = kKMeansRestarts);

// Sum of squared distances from each point to its assigned centroid.
double KMeansObjective(const Eigen::MatrixXd& points,
                       const std::vector<int>& assignment,
                       const Eigen::MatrixXd& centroids);

struct CoClustering {
  int k = 0;
  std::vector<int> word_assignment;  // parallel to graph.words
  std::vector<int> unit_assignment;  // parallel to graph.units
  // cluster_edges(i, j) = mean signed weight between word cluster i and unit
  // cluster j. Word cluster i is paired with unit cluster i.
  Eigen::MatrixXd cluster_edges;

  Json ToJson() const;
  static CoClustering FromJson(const Json& j);
};

inline constexpr int kDefaultClusterCount = 10;
inline constexpr double kDefaultEdgeFilterRatio = 0.2;

// How signed response weights enter the spectral embedding. kMagnitude
// clusters |w| and skips the trivial leading singular pair. kSigned keeps the
// signs in the normalized matrix (degrees still from |w|) and uses the
// leading vectors directly, so words with opposite responses on the same
// units separate; on a non-negative matrix it equals kMagnitude.
enum class Affinity { kMagnitude, kSigned };

std::string_view AffinityName(Affinity a);
// "magnitude" or "signed"; InvalidArgument otherwise.
Affinity ParseAffinity(std::string_view name);

// Spectral co-clustering with k-means++ on the stacked word/unit embedding.
// Throws InvalidArgument if k is outside [1, min(rows, cols)] and
// NumericalError if the SVD fails.
CoClustering SpectralCocluster(const BipartiteGraph& graph, int k,
                               std::uint64_t seed,
                               Affinity affinity = Affinity::kMagnitude);

// Mean signed weight for every (word cluster, unit cluster) pair; pairs with
// an empty side get 0.
Eigen::MatrixXd ClusterEdges(const BipartiteGraph& graph,
                             const std::vector<int>& word_assignment,
                             const std::vector<int>& unit_assignment, int k);

struct MaskedEdges {
  Eigen::MatrixXd weights;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> visible;
};

// Hides edges with |e| < ratio * max|e|.
MaskedEdges FilterEdges(const Eigen::MatrixXd& edges, double ratio);

struct WordCloudEntry {
  int word = 0;
  std::string text;
  double weight = 0.0;  // in (0, 1], 1 at the most central word
  PosTag pos = PosTag::kOther;
};

struct WordCloud {
  int cluster = 0;
  // Sorted by weight descending, ties by text.
  std::vector<WordCloudEntry> words;
};

// Word sizes for one cluster: 1 / (1 + distance to the cluster centroid in
// response space), normalized so the largest is 1.
WordCloud MakeWordCloud(const BipartiteGraph& graph,
                        const CoClustering& clustering, int cluster,
                        const Vocabulary& vocabulary,
                        const PosLexicon& lexicon);

}  // namespace rnnlens

#endif  // RNNLENS_COCLUSTER_H_

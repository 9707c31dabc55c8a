#include "rnnlens/cocluster.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rnnlens/error.h"

namespace rnnlens {

namespace {

constexpr double kDegreeFloor = 1e-12;
// Singular values closer than this (relative to the largest) are treated as
// one degenerate subspace.
constexpr double kTieTolerance = 1e-9;

int CeilLog2(int k) {
  int l = 0;
  while ((1 << l) < k) ++l;
  return l;
}

}  // namespace

BipartiteGraph BuildBipartite(const ResponseRecord& record, int min_count) {
  BipartiteGraph g;
  for (int w : record.Words()) {
    if (record.Count(w) >= min_count) g.words.push_back(w);
  }
  if (g.words.empty()) {
    throw InvalidArgument("no word has at least " + std::to_string(min_count) +
                          " observations");
  }
  g.units.resize(static_cast<std::size_t>(record.dim()));
  for (int j = 0; j < record.dim(); ++j) g.units[j] = j;
  g.weights.resize(static_cast<Eigen::Index>(g.words.size()), record.dim());
  for (std::size_t i = 0; i < g.words.size(); ++i) {
    g.weights.row(static_cast<Eigen::Index>(i)) =
        ComputeExpectedResponse(record, g.words[i]).mean.transpose();
  }
  return g;
}

Eigen::MatrixXd ClusterEdges(const BipartiteGraph& graph,
                             const std::vector<int>& word_assignment,
                             const std::vector<int>& unit_assignment, int k) {
  const auto rows = graph.weights.rows();
  const auto cols = graph.weights.cols();
  if (static_cast<Eigen::Index>(word_assignment.size()) != rows ||
      static_cast<Eigen::Index>(unit_assignment.size()) != cols) {
    throw ShapeError("cluster assignment does not cover the graph");
  }
  // Row-cluster sums per unit first, then fold columns.
  Eigen::MatrixXd row_sums = Eigen::MatrixXd::Zero(k, cols);
  std::vector<double> word_sizes(k, 0.0), unit_sizes(k, 0.0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    row_sums.row(word_assignment[i]) += graph.weights.row(i);
    word_sizes[word_assignment[i]] += 1.0;
  }
  Eigen::MatrixXd edges = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < cols; ++j) {
    edges.col(unit_assignment[j]) += row_sums.col(j);
    unit_sizes[unit_assignment[j]] += 1.0;
  }
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double denom = word_sizes[a] * unit_sizes[b];
      edges(a, b) = denom > 0 ? edges(a, b) / denom : 0.0;
    }
  }
  return edges;
}

MaskedEdges FilterEdges(const Eigen::MatrixXd& edges, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw InvalidArgument("edge filter ratio must be in [0, 1]");
  }
  MaskedEdges m;
  m.weights = edges;
  const double threshold =
      ratio * (edges.size() > 0 ? edges.cwiseAbs().maxCoeff() : 0.0);
  m.visible = (edges.array().abs() >= threshold).matrix();
  return m;
}

std::string_view AffinityName(Affinity a) {
  return a == Affinity::kSigned ? "signed" : "magnitude";
}

Affinity ParseAffinity(std::string_view name) {
  if (name == "magnitude") return Affinity::kMagnitude;
  if (name == "signed") return Affinity::kSigned;
  throw InvalidArgument("affinity must be 'magnitude' or 'signed', got '" +
                        std::string(name) + "'");
}

CoClustering SpectralCocluster(const BipartiteGraph& graph, int k,
                               std::uint64_t seed, Affinity affinity_kind) {
  const Eigen::Index rows = graph.weights.rows();
  const Eigen::Index cols = graph.weights.cols();
  if (k < 1 || k > std::min(rows, cols)) {
    throw InvalidArgument("k must be in [1, " +
                          std::to_string(std::min(rows, cols)) + "], got " +
                          std::to_string(k));
  }
  if (!graph.weights.allFinite()) {
    throw InvalidArgument("bipartite weights must be finite");
  }
  CoClustering result;
  result.k = k;
  result.word_assignment.assign(static_cast<std::size_t>(rows), 0);
  result.unit_assignment.assign(static_cast<std::size_t>(cols), 0);
  if (k == 1) {
    result.cluster_edges = ClusterEdges(graph, result.word_assignment,
                                        result.unit_assignment, 1);
    return result;
  }

  const Eigen::MatrixXd affinity = graph.weights.cwiseAbs();
  const Eigen::VectorXd d1 = affinity.rowwise().sum();
  const Eigen::VectorXd d2 = affinity.colwise().sum().transpose();
  const Eigen::VectorXd inv_sqrt1 =
      d1.cwiseMax(kDegreeFloor).cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd inv_sqrt2 =
      d2.cwiseMax(kDegreeFloor).cwiseSqrt().cwiseInverse();
  const bool signed_input = affinity_kind == Affinity::kSigned &&
                            (graph.weights.array() < 0.0).any();
  Eigen::MatrixXd normalized =
      inv_sqrt1.asDiagonal() *
      (signed_input ? graph.weights : affinity) * inv_sqrt2.asDiagonal();

  // For a non-negative affinity the leading singular pair is known in closed
  // form (sqrt of the degrees, singular value 1). Deflating it analytically
  // keeps the remaining spectrum well-defined even when the graph has
  // several components and singular value 1 is repeated.
  const double total = d1.sum();
  if (!(total > 0.0)) {
    throw InvalidArgument("bipartite graph has no non-zero edges");
  }
  if (!signed_input) {
    const Eigen::VectorXd u1 = d1.cwiseSqrt() / std::sqrt(total);
    const Eigen::VectorXd v1 = d2.cwiseSqrt() / std::sqrt(total);
    normalized.noalias() -= u1 * v1.transpose();
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(normalized,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("SVD of the normalized affinity failed");
  }
  const Eigen::VectorXd& sigma = svd.singularValues();
  if (!sigma.allFinite()) throw NumericalError("SVD produced non-finite values");

  // ceil(log2 k) vectors, extended to cover the whole tied group at the cut
  // so the embedding does not depend on an arbitrary basis choice.
  Eigen::Index used = std::min<Eigen::Index>(CeilLog2(k), sigma.size());
  const double tol = kTieTolerance * std::max(1.0, sigma.size() ? sigma[0] : 0.0);
  while (used > 0 && used < sigma.size() &&
         std::abs(sigma[used] - sigma[used - 1]) <= tol && sigma[used] > tol) {
    ++used;
  }

  Eigen::MatrixXd embedding(rows + cols, used);
  embedding.topRows(rows) = inv_sqrt1.asDiagonal() * svd.matrixU().leftCols(used);
  embedding.bottomRows(cols) =
      inv_sqrt2.asDiagonal() * svd.matrixV().leftCols(used);

  // Zero-degree nodes carry no signal; they are clustered afterwards.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (d1[i] > kDegreeFloor) active.push_back(i);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (d2[j] > kDegreeFloor) active.push_back(rows + j);
  }
  if (static_cast<int>(active.size()) < k) {
    throw InvalidArgument("fewer connected nodes than clusters");
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(active.size()), used);
  for (std::size_t a = 0; a < active.size(); ++a) {
    points.row(static_cast<Eigen::Index>(a)) = embedding.row(active[a]);
  }
  KMeansResult km = KMeans(points, k, seed);

  std::vector<int> joint(static_cast<std::size_t>(rows + cols), -1);
  for (std::size_t a = 0; a < active.size(); ++a) joint[active[a]] = km.assignment[a];
  const Eigen::RowVectorXd origin = Eigen::RowVectorXd::Zero(used);
  for (auto& label : joint) {
    if (label >= 0) continue;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = (km.centroids.row(c) - origin).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    label = best;
  }
  std::copy(joint.begin(), joint.begin() + rows, result.word_assignment.begin());
  std::copy(joint.begin() + rows, joint.end(), result.unit_assignment.begin());
  result.cluster_edges = ClusterEdges(graph, result.word_assignment,
                                      result.unit_assignment, k);
  return result;
}

Json CoClustering::ToJson() const {
  Json edges = Json::array();
  for (Eigen::Index i = 0; i < cluster_edges.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < cluster_edges.cols(); ++j) {
      row.push_back(cluster_edges(i, j));
    }
    edges.push_back(std::move(row));
  }
  return Json{{"k", k},
              {"word_assignment", word_assignment},
              {"unit_assignment", unit_assignment},
              {"cluster_edges", std::move(edges)}};
}

CoClustering CoClustering::FromJson(const Json& j) {
  CoClustering c;
  c.k = j.at("k").get<int>();
  c.word_assignment = j.at("word_assignment").get<std::vector<int>>();
  c.unit_assignment = j.at("unit_assignment").get<std::vector<int>>();
  const Json& edges = j.at("cluster_edges");
  c.cluster_edges.resize(c.k, c.k);
  if (static_cast<int>(edges.size()) != c.k) {
    throw ShapeError("cluster_edges is not k x k");
  }
  for (int a = 0; a < c.k; ++a) {
    if (static_cast<int>(edges[a].size()) != c.k) {
      throw ShapeError("cluster_edges is not k x k");
    }
    for (int b = 0; b < c.k; ++b) c.cluster_edges(a, b) = edges[a][b].get<double>();
  }
  return c;
}

WordCloud MakeWordCloud(const BipartiteGraph& graph,
                        const CoClustering& clustering, int cluster,
                        const Vocabulary& vocabulary,
                        const PosLexicon& lexicon) {
  std::vector<Eigen::Index> members;
  for (std::size_t i = 0; i < clustering.word_assignment.size(); ++i) {
    if (clustering.word_assignment[i] == cluster) {
      members.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (members.empty()) {
    throw InvalidArgument("word cluster " + std::to_string(cluster) +
                          " is empty");
  }
  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(graph.weights.cols());
  for (auto i : members) centroid += graph.weights.row(i);
  centroid /= static_cast<double>(members.size());

  WordCloud cloud;
  cloud.cluster = cluster;
  double max_raw = 0.0;
  for (auto i : members) {
    const double dist = (graph.weights.row(i) - centroid).norm();
    WordCloudEntry e;
    e.word = graph.words[i];
    e.text = vocabulary.Token(e.word);
    e.weight = 1.0 / (1.0 + dist);
    e.pos = lexicon.Tag(e.text);
    max_raw = std::max(max_raw, e.weight);
    cloud.words.push_back(std::move(e));
  }
  for (auto& e : cloud.words) e.weight /= max_raw;
  std::sort(cloud.words.begin(), cloud.words.end(),
            [](const WordCloudEntry& a, const WordCloudEntry& b) {
              if (a.weight != b.weight) return a.weight > b.weight;
              return a.text < b.text;
            });
  return cloud;
}

}  // namespace rnnlens

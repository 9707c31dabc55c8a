#include <algorithm>
#include <limits>
#include <random>

#include "rnnlens/cocluster.h"
#include "rnnlens/error.h"

namespace rnnlens {

namespace {

// Index of the nearest centroid; ties go to the lower index.
int Nearest(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& p,
            double* dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

Eigen::MatrixXd SeedPlusPlus(const Eigen::MatrixXd& points, int k,
                             std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  Eigen::Index idx = first(rng);
  centroids.row(0) = points.row(idx);
  chosen[idx] = true;

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double target = u01(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    } else {
      // Every remaining point coincides with a chosen center; pick uniformly
      // among unchosen indices.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
      pick = free[any(rng)];
    }
    centroids.row(c) = points.row(pick);
    chosen[pick] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

// Gives every empty cluster the point farthest from its centroid within the
// currently largest cluster.
void RepairEmpty(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                 std::vector<int>& assignment, int k) {
  for (;;) {
    std::vector<int> sizes(k, 0);
    for (int a : assignment) ++sizes[a];
    auto empty = std::find(sizes.begin(), sizes.end(), 0);
    if (empty == sizes.end()) return;
    const int target = static_cast<int>(empty - sizes.begin());
    const int largest =
        static_cast<int>(std::max_element(sizes.begin(), sizes.end()) -
                         sizes.begin());
    if (sizes[largest] <= 1) return;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (assignment[i] != largest) continue;
      const double d = (points.row(i) - centroids.row(largest)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    assignment[far] = target;
  }
}

Eigen::MatrixXd Centroids(const Eigen::MatrixXd& points,
                          const std::vector<int>& assignment, int k,
                          const Eigen::MatrixXd& previous) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
  std::vector<int> sizes(k, 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(assignment[i]) += points.row(i);
    ++sizes[assignment[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (sizes[c] > 0) {
      sums.row(c) /= sizes[c];
    } else {
      sums.row(c) = previous.row(c);
    }
  }
  return sums;
}

KMeansResult RunLloyd(const Eigen::MatrixXd& points, int k,
                      std::mt19937_64& rng, int max_iterations) {
  const Eigen::Index n = points.rows();
  KMeansResult r;
  r.centroids = SeedPlusPlus(points, k, rng);
  r.assignment.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.assignment[i] = Nearest(r.centroids, points.row(i), nullptr);
  }
  RepairEmpty(points, r.centroids, r.assignment, k);
  r.objective = KMeansObjective(points, r.assignment, r.centroids);
  r.objective_history.push_back(r.objective);

  for (int it = 0; it < max_iterations; ++it) {
    r.centroids = Centroids(points, r.assignment, k, r.centroids);
    std::vector<int> next(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      // Keep the current cluster on exact ties so the fixpoint is reached.
      double best_d;
      int best = Nearest(r.centroids, points.row(i), &best_d);
      const double cur_d =
          (points.row(i) - r.centroids.row(r.assignment[i])).squaredNorm();
      next[i] = cur_d <= best_d ? r.assignment[i] : best;
    }
    RepairEmpty(points, r.centroids, next, k);
    ++r.iterations;
    const bool changed = next != r.assignment;
    r.assignment = std::move(next);
    if (changed) r.centroids = Centroids(points, r.assignment, k, r.centroids);
    r.objective = KMeansObjective(points, r.assignment, r.centroids);
    r.objective_history.push_back(r.objective);
    if (!changed) break;
  }
  return r;
}

}  // namespace

double KMeansObjective(const Eigen::MatrixXd& points,
                       const std::vector<int>& assignment,
                       const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(assignment[i])).squaredNorm();
  }
  return total;
}

KMeansResult KMeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iterations, int restarts) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (k > n) {
    throw InvalidArgument("k (" + std::to_string(k) +
                          ") exceeds the number of points (" +
                          std::to_string(n) + ")");
  }
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  for (int run = 0; run < restarts; ++run) {
    KMeansResult r = RunLloyd(points, k, rng, max_iterations);
    if (run == 0 || r.objective < best.objective) best = std::move(r);
  }
  return best;
}

}  // namespace rnnlens

#include "poison/cluster.hpp"

#include <limits>
#include <stdexcept>

#include "poison/rng.hpp"

namespace poison {

namespace {

Scalar sq_dist(const Mat& points, Index i, const Mat& centroids, Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

Mat kmeanspp_init(const Mat& points, int k, Rng& rng) {
  const Index n = points.rows();
  Mat centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n))));
  Vec d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = sq_dist(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    const Scalar total = d2.sum();
    Index chosen = 0;
    if (total > 0) {
      // Sample proportional to squared distance via a cumulative scan.
      const Scalar target = rng.uniform01() * total;
      Scalar acc = 0;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(chosen);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points, i, centroids, c));
  }
  return centroids;
}

// Nearest centroid per point; strict < keeps ties at the lowest cluster index.
std::vector<int> assign(const Mat& points, const Mat& centroids) {
  std::vector<int> assignment(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    Scalar best_d = sq_dist(points, i, centroids, 0);
    for (Index c = 1; c < centroids.rows(); ++c) {
      const Scalar d = sq_dist(points, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
  }
  return assignment;
}

Scalar total_inertia(const Mat& points, const Mat& centroids, const std::vector<int>& assignment) {
  Scalar inertia = 0;
  for (Index i = 0; i < points.rows(); ++i)
    inertia += sq_dist(points, i, centroids, assignment[static_cast<std::size_t>(i)]);
  return inertia;
}

void update_centroids(const Mat& points, std::vector<int>& assignment, Mat& centroids) {
  const int k = static_cast<int>(centroids.rows());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  centroids.setZero();
  for (Index i = 0; i < points.rows(); ++i) {
    const int c = assignment[static_cast<std::size_t>(i)];
    centroids.row(c) += points.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0)
      centroids.row(c) /= static_cast<Scalar>(counts[static_cast<std::size_t>(c)]);

  // Empty-cluster repair: steal the point farthest from its own centroid,
  // taken from a cluster that can spare one.
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Index steal = -1;
    Scalar worst = -1;
    for (Index i = 0; i < points.rows(); ++i) {
      const int owner = assignment[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(owner)] < 2) continue;
      const Scalar d = sq_dist(points, i, centroids, owner);
      if (d > worst) {
        worst = d;
        steal = i;
      }
    }
    if (steal < 0) throw std::logic_error("kmeans: cannot repair empty cluster");
    const int donor = assignment[static_cast<std::size_t>(steal)];
    assignment[static_cast<std::size_t>(steal)] = c;
    --counts[static_cast<std::size_t>(donor)];
    counts[static_cast<std::size_t>(c)] = 1;
    centroids.row(c) = points.row(steal);
    // Recompute the donor centroid without the stolen point.
    centroids.row(donor).setZero();
    for (Index i = 0; i < points.rows(); ++i)
      if (assignment[static_cast<std::size_t>(i)] == donor) centroids.row(donor) += points.row(i);
    centroids.row(donor) /= static_cast<Scalar>(counts[static_cast<std::size_t>(donor)]);
  }
}

}  // namespace

Clustering kmeans(const Mat& points, int k, int max_iter, std::uint64_t seed) {
  if (points.rows() == 0) throw std::invalid_argument("kmeans: no points");
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (static_cast<Index>(k) > points.rows())
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(points.rows()) + " points");

  Rng rng(seed);
  Clustering result;
  result.centroids = kmeanspp_init(points, k, rng);
  result.assignment = assign(points, result.centroids);
  for (int iter = 0; iter < max_iter; ++iter) {
    update_centroids(points, result.assignment, result.centroids);
    std::vector<int> next = assign(points, result.centroids);
    result.inertia_trace.push_back(total_inertia(points, result.centroids, next));
    const bool converged = next == result.assignment;
    result.assignment = std::move(next);
    if (converged) break;
  }
  result.inertia = total_inertia(points, result.centroids, result.assignment);
  return result;
}

}  // namespace poison

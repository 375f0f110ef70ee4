#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "poison/cluster.hpp"
#include "poison/rng.hpp"

using namespace poison;

namespace {

Mat random_points(Rng& rng, Index n, Index d) {
  Mat m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

double sq_dist_oracle(const Mat& points, Index p, const Mat& centroids, Index c) {
  double acc = 0;
  for (Index j = 0; j < points.cols(); ++j) {
    const double diff = points(p, j) - centroids(c, j);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

TEST_CASE("two well-separated pairs form two clusters") {
  Mat points(4, 2);
  points << 0.0, 0.0, 0.1, 0.0, 10.0, 10.0, 10.1, 10.0;
  const Clustering c = kmeans(points, 2, 50, 3);
  CHECK(c.assignment[0] == c.assignment[1]);
  CHECK(c.assignment[2] == c.assignment[3]);
  CHECK(c.assignment[0] != c.assignment[2]);
  CHECK(c.inertia == doctest::Approx(0.005 * 2).epsilon(1e-9));
}

TEST_CASE("assignment is nearest-centroid with ties to the lowest index") {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat points = random_points(rng, 60, 4);
    const int k = 2 + static_cast<int>(rng.uniform_int(6));
    const Clustering c = kmeans(points, k, 100, rep);
    REQUIRE(c.assignment.size() == 60);
    for (Index p = 0; p < 60; ++p) {
      const int a = c.assignment[static_cast<std::size_t>(p)];
      const double own = sq_dist_oracle(points, p, c.centroids, a);
      for (int other = 0; other < k; ++other) {
        const double alt = sq_dist_oracle(points, p, c.centroids, other);
        if (other < a) {
          CHECK(alt > own);  // a tie here would have gone to the lower index
        } else {
          CHECK(alt >= own - 1e-12 * std::max(1.0, own));
        }
      }
    }
  }
}

TEST_CASE("every cluster ends non-empty") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat points = random_points(rng, 30, 3);
    const int k = 1 + static_cast<int>(rng.uniform_int(10));
    const Clustering c = kmeans(points, k, 100, rep * 13 + 1);
    std::set<int> seen(c.assignment.begin(), c.assignment.end());
    CHECK(seen.size() == static_cast<std::size_t>(k));
    for (int a : c.assignment) {
      CHECK(a >= 0);
      CHECK(a < k);
    }
  }
}

TEST_CASE("inertia trace never increases and matches a recomputation") {
  Rng rng(9);
  const Mat points = random_points(rng, 80, 5);
  const Clustering c = kmeans(points, 6, 100, 21);
  for (std::size_t i = 1; i < c.inertia_trace.size(); ++i) {
    CHECK(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-9);
  }
  double recomputed = 0;
  for (Index p = 0; p < points.rows(); ++p) {
    recomputed += sq_dist_oracle(points, p, c.centroids,
                                 c.assignment[static_cast<std::size_t>(p)]);
  }
  CHECK(c.inertia == doctest::Approx(recomputed).epsilon(1e-9));
  CHECK(c.inertia <= c.inertia_trace.front() + 1e-9);
}

TEST_CASE("k equal to the point count gives zero inertia") {
  Mat points(5, 2);
  points << 0, 0, 1, 0, 2, 0, 3, 0, 4, 0;
  const Clustering c = kmeans(points, 5, 50, 2);
  CHECK(c.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans is deterministic in the seed") {
  Rng rng(31);
  const Mat points = random_points(rng, 50, 4);
  const Clustering a = kmeans(points, 5, 100, 8);
  const Clustering b = kmeans(points, 5, 100, 8);
  CHECK(a.assignment == b.assignment);
  CHECK(a.inertia == b.inertia);
  bool all_same = true;
  const Clustering c = kmeans(points, 5, 100, 9);
  if (a.assignment != c.assignment) all_same = false;
  // A different seed is allowed to find the same optimum, but the centroids
  // document which points seeded them, so identical everything is suspicious.
  WARN(!all_same);
}

TEST_CASE("kmeans validates its arguments") {
  Rng rng(2);
  const Mat points = random_points(rng, 10, 3);
  CHECK_THROWS_AS(kmeans(points, 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(points, 11, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(Mat(0, 3), 1, 10, 1), std::invalid_argument);
}

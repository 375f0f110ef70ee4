#pragma once

#include <cstdint>
#include <vector>

#include "poison/types.hpp"

namespace poison {

struct Clustering {
  Mat centroids;                      // k x d
  std::vector<int> assignment;        // point index -> cluster index
  Scalar inertia = 0;                 // sum of squared distances at termination
  std::vector<Scalar> inertia_trace;  // one entry per Lloyd iteration, non-increasing
};

/// Lloyd's algorithm with k-means++ seeding, squared Euclidean distance on
/// raw embeddings. Runs until the assignment reaches a fixpoint or max_iter.
/// Assignment ties go to the lowest cluster index; an emptied cluster steals
/// the point currently farthest from its centroid. Deterministic given seed.
Clustering kmeans(const Mat& points, int k, int max_iter, std::uint64_t seed);

}  // namespace poison

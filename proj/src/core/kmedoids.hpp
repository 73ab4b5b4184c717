#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace lakeorg {

struct Clustering {
  std::vector<std::size_t> medoids;     // ascending
  std::vector<std::size_t> assignment;  // point -> index into medoids
  double cost = 0.0;                    // sum of point-to-medoid distances
};

using Distance = std::function<double(std::size_t, std::size_t)>;

enum class MedoidMethod {
  /// Greedy swap phase until no swap lowers the cost.
  pam,
  /// Assign / re-centre iterations; cheaper for large k.
  alternate,
};

/// k-medoids over n points. Seeds by farthest-point traversal starting from a
/// point drawn with `seed`. Every medoid is assigned to itself, so no cluster
/// is empty; other ties go to the lower medoid.
Clustering kmedoids(std::size_t n, std::size_t k, const Distance& dist, std::uint64_t seed,
                    MedoidMethod method);

}  // namespace lakeorg

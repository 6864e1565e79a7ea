#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "cctsp/tsp.hpp"

namespace cctsp {

// Ordered partition of 0..N-1 into clusters of size <= k, in creation order.
struct Decomposition {
    std::vector<std::vector<int>> clusters;
    int k = 0;
};

struct DecomposeStats {
    std::size_t distance_evals = 0;
};

// Greedy nearest-neighbor grouping: scan city indices in ascending order;
// each unassigned city seeds a new cluster and pulls in its k-1 nearest
// unassigned cities (exact Euclidean distance, ties to the lower index).
// Single pass, no centroid refinement.
Decomposition variant_knn(const TspInstance& inst, int k,
                          DecomposeStats* stats = nullptr);

// Throws Error unless the clusters form a partition of 0..n-1 with every
// cluster size <= k.
void validate_partition(const Decomposition& d, int n);

// "cluster_id,city_index" rows, cluster creation order.
void write_decomposition_csv(std::ostream& out, const Decomposition& d);

}  // namespace cctsp

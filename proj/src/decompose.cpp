#include "cctsp/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cctsp {

Decomposition variant_knn(const TspInstance& inst, int k, DecomposeStats* stats) {
    const int n = inst.size();
    if (k < 2 || k > n)
        throw Error("cluster size k=" + std::to_string(k) + " out of range 2.." +
                    std::to_string(n));

    Decomposition d;
    d.k = k;
    std::vector<char> assigned(static_cast<std::size_t>(n), 0);
    // unassigned city indices, kept in ascending order
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[std::size_t(i)] = i;

    std::size_t evals = 0;
    for (int seed = 0; seed < n; ++seed) {
        if (assigned[std::size_t(seed)]) continue;
        std::vector<int> cluster{seed};
        assigned[std::size_t(seed)] = 1;

        // distances from the seed to every remaining unassigned city
        std::vector<std::pair<double, int>> cand;
        cand.reserve(pool.size());
        const Point& sp = inst.cities[std::size_t(seed)];
        for (int c : pool) {
            if (assigned[std::size_t(c)]) continue;
            const Point& cp = inst.cities[std::size_t(c)];
            cand.emplace_back(std::hypot(sp.x - cp.x, sp.y - cp.y), c);
            ++evals;
        }
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k) - 1, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + long(take), cand.end());
        for (std::size_t j = 0; j < take; ++j) {
            cluster.push_back(cand[j].second);
            assigned[std::size_t(cand[j].second)] = 1;
        }
        d.clusters.push_back(std::move(cluster));

        // compact the pool so later scans only touch unassigned cities
        std::erase_if(pool, [&](int c) { return assigned[std::size_t(c)]; });
    }

    if (stats) stats->distance_evals = evals;
    validate_partition(d, n);
    return d;
}

void validate_partition(const Decomposition& d, int n) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::size_t total = 0;
    for (const auto& cluster : d.clusters) {
        if (int(cluster.size()) > d.k)
            throw Error("cluster of size " + std::to_string(cluster.size()) +
                        " exceeds k=" + std::to_string(d.k));
        for (int idx : cluster) {
            if (idx < 0 || idx >= n)
                throw Error("cluster index " + std::to_string(idx) + " out of range");
            if (seen[std::size_t(idx)])
                throw Error("city " + std::to_string(idx) + " assigned twice");
            seen[std::size_t(idx)] = 1;
            ++total;
        }
    }
    if (total != std::size_t(n))
        throw Error("decomposition covers " + std::to_string(total) + " of " +
                    std::to_string(n) + " cities");
}

void write_decomposition_csv(std::ostream& out, const Decomposition& d) {
    out << "cluster_id,city_index\n";
    for (std::size_t c = 0; c < d.clusters.size(); ++c)
        for (int idx : d.clusters[c]) out << c << "," << idx << "\n";
}

}  // namespace cctsp

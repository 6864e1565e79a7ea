#include "cctsp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace cctsp {

std::vector<Point> normalize_subcomponent(const std::vector<Point>& coords,
                                          NormalizeTransform* transform) {
    if (coords.empty()) throw Error("normalize_subcomponent: empty input");
    double min_x = coords[0].x, max_x = coords[0].x;
    double min_y = coords[0].y, max_y = coords[0].y;
    for (const Point& p : coords) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double extent = std::max(max_x - min_x, max_y - min_y);
    std::vector<Point> out(coords.size());
    if (extent == 0.0) {
        for (Point& p : out) p = {0.5, 0.5};
        if (transform) *transform = {min_x, min_y, 0.0};
        return out;
    }
    const double scale = 1.0 / extent;
    for (std::size_t i = 0; i < coords.size(); ++i)
        out[i] = {(coords[i].x - min_x) * scale, (coords[i].y - min_y) * scale};
    if (transform) *transform = {min_x, min_y, scale};
    return out;
}

std::vector<int> held_karp(const std::vector<Point>& coords) {
    const int n = int(coords.size());
    if (n > 13)
        throw Error("held_karp: n=" + std::to_string(n) + " exceeds limit 13");
    if (n == 1) return {0};

    std::vector<double> dist(static_cast<std::size_t>(n) * std::size_t(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            dist[std::size_t(i) * std::size_t(n) + std::size_t(j)] =
                std::hypot(coords[std::size_t(i)].x - coords[std::size_t(j)].x,
                           coords[std::size_t(i)].y - coords[std::size_t(j)].y);

    // dp[mask][j]: shortest path from 0 through the cities of `mask`, ending
    // at j. City 0 is fixed as the start and excluded from the mask bits.
    const int m = n - 1;
    const std::size_t n_masks = std::size_t(1) << m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(n_masks * std::size_t(m), inf);
    std::vector<int> parent(n_masks * std::size_t(m), -1);

    for (int j = 0; j < m; ++j)
        dp[(static_cast<std::size_t>(1) << j) * std::size_t(m) + std::size_t(j)] =
            dist[std::size_t(j + 1)];

    for (std::size_t mask = 1; mask < n_masks; ++mask) {
        for (int j = 0; j < m; ++j) {
            if (!(mask & (static_cast<std::size_t>(1) << j))) continue;
            const double cur = dp[mask * std::size_t(m) + std::size_t(j)];
            if (cur == inf) continue;
            for (int nx = 0; nx < m; ++nx) {
                if (mask & (static_cast<std::size_t>(1) << nx)) continue;
                const std::size_t nmask = mask | (static_cast<std::size_t>(1) << nx);
                const double cand =
                    cur + dist[std::size_t(j + 1) * std::size_t(n) + std::size_t(nx + 1)];
                double& slot = dp[nmask * std::size_t(m) + std::size_t(nx)];
                if (cand < slot) {
                    slot = cand;
                    parent[nmask * std::size_t(m) + std::size_t(nx)] = j;
                }
            }
        }
    }

    const std::size_t full = n_masks - 1;
    double best = inf;
    int best_end = 0;
    for (int j = 0; j < m; ++j) {
        const double cand = dp[full * std::size_t(m) + std::size_t(j)] +
                            dist[std::size_t(j + 1)];
        if (cand < best) {
            best = cand;
            best_end = j;
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::size_t mask = full;
    int j = best_end;
    for (int pos = n - 1; pos >= 1; --pos) {
        order[std::size_t(pos)] = j + 1;
        const int pj = parent[mask * std::size_t(m) + std::size_t(j)];
        mask &= ~(static_cast<std::size_t>(1) << j);
        j = pj;
    }
    order[0] = 0;
    return order;
}

std::vector<int> nearest_neighbor(const std::vector<Point>& coords) {
    const int n = int(coords.size());
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    int cur = 0;
    order.push_back(0);
    visited[0] = 1;
    for (int step = 1; step < n; ++step) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (visited[std::size_t(j)]) continue;
            const double d = std::hypot(coords[std::size_t(cur)].x - coords[std::size_t(j)].x,
                                        coords[std::size_t(cur)].y - coords[std::size_t(j)].y);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        order.push_back(best);
        visited[std::size_t(best)] = 1;
        cur = best;
    }
    return order;
}

std::vector<int> two_opt(const std::vector<Point>& coords, std::vector<int> order) {
    const int n = int(coords.size());
    validate_permutation(order, n);
    if (n < 4) return order;

    auto d = [&](int a, int b) {
        return std::hypot(coords[std::size_t(a)].x - coords[std::size_t(b)].x,
                          coords[std::size_t(a)].y - coords[std::size_t(b)].y);
    };

    bool improved = true;
    while (improved) {
        improved = false;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue;  // same edge pair
                const int a = order[std::size_t(i)], b = order[std::size_t(i + 1)];
                const int c = order[std::size_t(j)], e = order[std::size_t((j + 1) % n)];
                const double delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
                if (delta < -1e-12) {
                    std::reverse(order.begin() + i + 1, order.begin() + j + 1);
                    improved = true;
                }
            }
        }
    }
    return order;
}

std::vector<int> HeldKarpSolver::solve(const std::vector<Point>& coords,
                                       RngStream&) const {
    return held_karp(coords);
}

std::vector<int> NearestNeighborSolver::solve(const std::vector<Point>& coords,
                                              RngStream&) const {
    return nearest_neighbor(coords);
}

std::vector<int> TwoOptSolver::solve(const std::vector<Point>& coords,
                                     RngStream&) const {
    return two_opt(coords, nearest_neighbor(coords));
}

std::vector<int> RandomSolver::solve(const std::vector<Point>& coords,
                                     RngStream& rng) const {
    std::vector<int> order(coords.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);
    return order;
}

std::vector<int> PtrNetSolver::solve(const std::vector<Point>& coords,
                                     RngStream& rng) const {
    return ptrnet_solve(model_, coords, rng, samples_);
}

namespace {

// One way to lay a cluster down as an open path inside the spliced tour.
// Candidates come from cutting one edge of the solved cycle (either
// direction), or — when the sub-solver is exact — from the provably optimal
// Hamiltonian path for every ordered endpoint pair.
struct PathChoice {
    std::vector<int> order;  // global city indices, start to end
    double path_len = 0.0;
};

// Every cycle edge as the cut, both directions: 2n candidate paths.
std::vector<PathChoice> cycle_cut_choices(
    const std::vector<int>& cycle,
    const std::function<double(int, int)>& dist) {
    const int n = int(cycle.size());
    double cycle_len = 0.0;
    for (int i = 0; i < n; ++i)
        cycle_len += dist(cycle[std::size_t(i)], cycle[std::size_t((i + 1) % n)]);
    std::vector<PathChoice> out;
    out.reserve(std::size_t(2) * std::size_t(n));
    for (int cut = 0; cut < n; ++cut) {
        const double plen =
            cycle_len - dist(cycle[std::size_t(cut)],
                             cycle[std::size_t((cut + 1) % n)]);
        PathChoice fwd;
        fwd.path_len = plen;
        fwd.order.reserve(std::size_t(n));
        for (int i = 1; i <= n; ++i)
            fwd.order.push_back(cycle[std::size_t((cut + i) % n)]);
        PathChoice rev;
        rev.path_len = plen;
        rev.order.assign(fwd.order.rbegin(), fwd.order.rend());
        out.push_back(std::move(fwd));
        out.push_back(std::move(rev));
    }
    return out;
}

// The optimal Hamiltonian path for every ordered (start, end) pair over the
// given cities: n(n-1) candidates, each exact by dynamic programming over
// subsets. Requires n <= 13 (the same bound as the exact cycle solver).
std::vector<PathChoice> optimal_path_choices(
    const std::vector<int>& cities,
    const std::function<double(int, int)>& dist) {
    const int n = int(cities.size());
    std::vector<double> ld(std::size_t(n) * std::size_t(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            ld[std::size_t(i) * std::size_t(n) + std::size_t(j)] =
                dist(cities[std::size_t(i)], cities[std::size_t(j)]);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<PathChoice> out;
    out.reserve(std::size_t(n) * std::size_t(n - 1));
    for (int s = 0; s < n; ++s) {
        std::vector<int> others;
        others.reserve(std::size_t(n - 1));
        for (int i = 0; i < n; ++i)
            if (i != s) others.push_back(i);
        const int m = n - 1;
        const std::size_t n_masks = std::size_t(1) << m;
        std::vector<double> dp(n_masks * std::size_t(m), inf);
        std::vector<int> parent(n_masks * std::size_t(m), -1);
        for (int j = 0; j < m; ++j)
            dp[(std::size_t(1) << j) * std::size_t(m) + std::size_t(j)] =
                ld[std::size_t(s) * std::size_t(n) + std::size_t(others[std::size_t(j)])];
        for (std::size_t mask = 1; mask < n_masks; ++mask) {
            for (int j = 0; j < m; ++j) {
                if (!(mask & (std::size_t(1) << j))) continue;
                const double cur = dp[mask * std::size_t(m) + std::size_t(j)];
                if (cur == inf) continue;
                for (int nx = 0; nx < m; ++nx) {
                    if (mask & (std::size_t(1) << nx)) continue;
                    const std::size_t nmask = mask | (std::size_t(1) << nx);
                    const double cand =
                        cur + ld[std::size_t(others[std::size_t(j)]) * std::size_t(n) +
                                 std::size_t(others[std::size_t(nx)])];
                    double& slot = dp[nmask * std::size_t(m) + std::size_t(nx)];
                    if (cand < slot) {
                        slot = cand;
                        parent[nmask * std::size_t(m) + std::size_t(nx)] = j;
                    }
                }
            }
        }
        const std::size_t full = n_masks - 1;
        for (int e = 0; e < m; ++e) {
            PathChoice c;
            c.path_len = dp[full * std::size_t(m) + std::size_t(e)];
            c.order.assign(std::size_t(n), 0);
            std::size_t mask = full;
            int j = e;
            for (int pos = n - 1; pos >= 1; --pos) {
                c.order[std::size_t(pos)] = cities[std::size_t(others[std::size_t(j)])];
                const int pj = parent[mask * std::size_t(m) + std::size_t(j)];
                mask &= ~(std::size_t(1) << j);
                j = pj;
            }
            c.order[0] = cities[std::size_t(s)];
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Choose an open-path representation for every cluster so the spliced tour
// (paths concatenated in cluster order plus the implied connecting and
// closing edges) is as short as possible. Clusters of size <= 2 keep their
// fixed index-order representation. Exact dynamic program over the chain of
// clusters, repeated for each choice of the first cluster to close the loop;
// transitions only depend on the previous cluster's end city, so candidates
// are grouped by endpoint.
void splice_cycles(const TspInstance& inst, std::vector<std::vector<int>>& cycles,
                   const std::vector<char>& fixed,
                   const std::vector<char>& exact) {
    const std::size_t m = cycles.size();
    // A single cluster closes on itself: the elite equals the solved cycle,
    // and no alternative path representation can beat the optimal cycle.
    if (m <= 1) return;
    std::function<double(int, int)> dist = [&](int a, int b) {
        const Point& pa = inst.cities[std::size_t(a)];
        const Point& pb = inst.cities[std::size_t(b)];
        return std::hypot(pa.x - pb.x, pa.y - pb.y);
    };

    std::vector<std::vector<PathChoice>> choices(m);
    for (std::size_t ci = 0; ci < m; ++ci) {
        const std::vector<int>& cycle = cycles[ci];
        const int n = int(cycle.size());
        if (fixed[ci] || n <= 2) {
            PathChoice c;
            c.order = cycle;
            c.path_len = n == 2 ? dist(cycle[0], cycle[1]) : 0.0;
            choices[ci].push_back(std::move(c));
        } else if (exact[ci]) {
            choices[ci] = optimal_path_choices(cycle, dist);
        } else {
            choices[ci] = cycle_cut_choices(cycle, dist);
        }
    }

    double best_total = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_pick(m);
    std::vector<std::vector<double>> dp(m);
    std::vector<std::vector<std::size_t>> from(m);
    for (std::size_t ci = 1; ci < m; ++ci) {
        dp[ci].resize(choices[ci].size());
        from[ci].resize(choices[ci].size());
    }
    for (std::size_t first = 0; first < choices[0].size(); ++first) {
        const PathChoice& f = choices[0][first];
        // per distinct end city of the previous cluster: best cost + choice
        std::vector<std::pair<int, std::pair<double, std::size_t>>> prev_best{
            {f.order.back(), {f.path_len, first}}};
        for (std::size_t ci = 1; ci < m; ++ci) {
            for (std::size_t cur = 0; cur < choices[ci].size(); ++cur) {
                const PathChoice& c = choices[ci][cur];
                double best = std::numeric_limits<double>::infinity();
                std::size_t arg = 0;
                for (const auto& [end_city, cost_idx] : prev_best) {
                    const double cand =
                        cost_idx.first + dist(end_city, c.order.front());
                    if (cand < best) {
                        best = cand;
                        arg = cost_idx.second;
                    }
                }
                dp[ci][cur] = best + c.path_len;
                from[ci][cur] = arg;
            }
            prev_best.clear();
            for (std::size_t cur = 0; cur < choices[ci].size(); ++cur) {
                const int end_city = choices[ci][cur].order.back();
                auto it = std::find_if(prev_best.begin(), prev_best.end(),
                                       [&](const auto& e) { return e.first == end_city; });
                if (it == prev_best.end())
                    prev_best.push_back({end_city, {dp[ci][cur], cur}});
                else if (dp[ci][cur] < it->second.first)
                    it->second = {dp[ci][cur], cur};
            }
        }
        for (std::size_t last = 0; last < choices[m - 1].size(); ++last) {
            const double total =
                dp[m - 1][last] + dist(choices[m - 1][last].order.back(),
                                       f.order.front());
            if (total < best_total) {
                best_total = total;
                best_pick[0] = first;
                best_pick[m - 1] = last;
                for (std::size_t ci = m - 1; ci > 1; --ci)
                    best_pick[ci - 1] = from[ci][best_pick[ci]];
            }
        }
    }
    for (std::size_t ci = 0; ci < m; ++ci)
        cycles[ci] = choices[ci][best_pick[ci]].order;
}

}  // namespace

std::vector<std::vector<int>> solve_subcomponents(const TspInstance& inst,
                                                  const Decomposition& d,
                                                  const SubSolver& solver,
                                                  RngStream& rng,
                                                  bool two_opt_polish) {
    validate_partition(d, inst.size());
    std::vector<std::vector<int>> result;
    std::vector<char> fixed, exact;
    result.reserve(d.clusters.size());
    fixed.reserve(d.clusters.size());
    exact.reserve(d.clusters.size());
    for (std::size_t ci = 0; ci < d.clusters.size(); ++ci) {
        const std::vector<int>& cluster = d.clusters[ci];
        const int n = int(cluster.size());
        if (n <= 2) {
            result.push_back(cluster);  // any order is optimal
            fixed.push_back(1);
            exact.push_back(0);
            continue;
        }
        std::vector<Point> coords(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            coords[std::size_t(i)] = inst.cities[std::size_t(cluster[std::size_t(i)])];
        std::vector<Point> norm = normalize_subcomponent(coords);
        RngStream cluster_rng = rng.split(ci);
        std::vector<int> local;
        try {
            local = solver.solve(norm, cluster_rng);
            validate_permutation(local, n);
        } catch (const std::exception& e) {
            throw Error("sub-solver '" + solver.name() + "' failed on cluster " +
                        std::to_string(ci) + ": " + e.what());
        }
        if (two_opt_polish) local = two_opt(norm, std::move(local));
        std::vector<int> global(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            global[std::size_t(i)] = cluster[std::size_t(local[std::size_t(i)])];
        result.push_back(std::move(global));
        fixed.push_back(0);
        exact.push_back(solver.exact() ? 1 : 0);
    }
    splice_cycles(inst, result, fixed, exact);
    return result;
}

EliteTour combine(const TspInstance& inst,
                  const std::vector<std::vector<int>>& sub_permutations,
                  const Decomposition& d, const std::string& provenance) {
    if (sub_permutations.size() != d.clusters.size())
        throw Error("combine: " + std::to_string(sub_permutations.size()) +
                    " sub-tours for " + std::to_string(d.clusters.size()) +
                    " clusters");
    EliteTour elite;
    elite.provenance = provenance;
    for (std::size_t ci = 0; ci < sub_permutations.size(); ++ci) {
        const auto& sub = sub_permutations[ci];
        if (sub.size() != d.clusters[ci].size())
            throw Error("combine: sub-tour " + std::to_string(ci) +
                        " size mismatch with its cluster");
        elite.tour.order.insert(elite.tour.order.end(), sub.begin(), sub.end());
        std::vector<Point> pts(sub.size());
        std::vector<int> local(sub.size());
        for (std::size_t i = 0; i < sub.size(); ++i) {
            pts[i] = inst.cities[std::size_t(sub[i])];
            local[i] = int(i);
        }
        elite.per_cluster_lengths.push_back(tour_length(pts, local));
    }
    validate_permutation(elite.tour.order, inst.size());
    elite.tour.length_cache = tour_length(inst, elite.tour);
    return elite;
}

EliteTour build_elite(const TspInstance& inst, int k, const SubSolver& solver,
                      RngStream& rng, bool two_opt_polish) {
    Decomposition d = variant_knn(inst, k);
    auto subs = solve_subcomponents(inst, d, solver, rng, two_opt_polish);
    return combine(inst, subs, d, solver.name());
}

}  // namespace cctsp

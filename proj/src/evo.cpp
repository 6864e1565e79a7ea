#include "cctsp/evo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace cctsp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void validate_config(const EvoConfig& c) {
    if (c.population_size < 2) throw Error("population size must be >= 2");
    if (c.max_iterations < 0) throw Error("max_iterations must be >= 0");
    for (double r : {c.ga_mutation_rate, c.ga_crossover_rate, c.pso_w, c.pso_c1,
                     c.pso_c2, c.ia_mutation_rate, c.ia_affinity_threshold,
                     c.ia_concentration_weight, c.ia_immigrant_fraction})
        if (r < 0.0 || r > 1.0) throw Error("evo rate out of [0,1]");
}

void swap_mutate(std::vector<int>& order, RngStream& rng) {
    const std::size_t n = order.size();
    if (n < 2) return;
    const std::size_t i = rng.next_below(n);
    std::size_t j = rng.next_below(n - 1);
    if (j >= i) ++j;
    std::swap(order[i], order[j]);
}

}  // namespace

std::vector<int> random_permutation(int n, RngStream& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);
    return order;
}

std::vector<int> order_crossover(const std::vector<int>& parent1,
                                 const std::vector<int>& parent2, int cut1,
                                 int cut2) {
    const int n = int(parent1.size());
    std::vector<int> child(static_cast<std::size_t>(n), -1);
    std::vector<char> in_segment(static_cast<std::size_t>(n), 0);
    for (int i = cut1; i <= cut2; ++i) {
        child[std::size_t(i)] = parent1[std::size_t(i)];
        in_segment[std::size_t(parent1[std::size_t(i)])] = 1;
    }
    std::size_t fill = 0;
    for (int v : parent2) {
        if (in_segment[std::size_t(v)]) continue;
        while (child[fill] != -1) ++fill;
        child[fill] = v;
    }
    return child;
}

std::vector<std::pair<int, int>> swap_sequence(const std::vector<int>& from,
                                               const std::vector<int>& to) {
    const int n = int(from.size());
    std::vector<int> cur = from;
    std::vector<int> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pos[std::size_t(cur[std::size_t(i)])] = i;
    std::vector<std::pair<int, int>> swaps;
    for (int i = 0; i < n; ++i) {
        if (cur[std::size_t(i)] == to[std::size_t(i)]) continue;
        const int j = pos[std::size_t(to[std::size_t(i)])];
        swaps.emplace_back(i, j);
        std::swap(pos[std::size_t(cur[std::size_t(i)])],
                  pos[std::size_t(cur[std::size_t(j)])]);
        std::swap(cur[std::size_t(i)], cur[std::size_t(j)]);
    }
    return swaps;
}

void apply_swaps(std::vector<int>& order,
                 const std::vector<std::pair<int, int>>& swaps) {
    for (auto [i, j] : swaps) std::swap(order[std::size_t(i)], order[std::size_t(j)]);
}

double tour_similarity(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    auto edge_key = [n](int u, int v) {
        return std::uint64_t(std::min(u, v)) * n + std::uint64_t(std::max(u, v));
    };
    std::unordered_set<std::uint64_t> edges;
    edges.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i)
        edges.insert(edge_key(a[i], a[(i + 1) % n]));
    std::size_t shared = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (edges.count(edge_key(b[i], b[(i + 1) % n]))) ++shared;
    return double(shared) / double(n);
}

TrialReport ga_run(const TspInstance& inst, const EvoConfig& config,
                   const std::optional<EliteTour>& elite, RngStream& rng) {
    validate_config(config);
    const auto start = Clock::now();
    const int n = inst.size();
    const int P = config.population_size;
    DistanceCache dist(inst, DistanceMode::EuclideanExact);

    std::vector<std::vector<int>> pop(static_cast<std::size_t>(P));
    for (auto& ind : pop) ind = random_permutation(n, rng);
    if (elite) {
        validate_permutation(elite->tour.order, n);
        pop[0] = elite->tour.order;
    }

    std::vector<double> fitness(static_cast<std::size_t>(P));
    for (int i = 0; i < P; ++i) fitness[std::size_t(i)] = dist.tour_length(pop[std::size_t(i)]);

    TrialReport report;
    report.seed = rng.seed();
    auto best_it = std::min_element(fitness.begin(), fitness.end());
    std::size_t best_idx = std::size_t(best_it - fitness.begin());
    std::vector<int> best_tour = pop[best_idx];
    double best_len = *best_it;
    report.initial_best = best_len;
    report.best_by_iteration.push_back(best_len);

    auto tournament = [&]() -> std::size_t {
        std::size_t winner = rng.next_below(static_cast<std::size_t>(P));
        for (int t = 1; t < config.tournament_size; ++t) {
            const std::size_t cand = rng.next_below(static_cast<std::size_t>(P));
            if (fitness[cand] < fitness[winner]) winner = cand;
        }
        return winner;
    };

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        std::vector<std::vector<int>> next(static_cast<std::size_t>(P));
        next[0] = best_tour;  // 1-elitism
        for (int i = 1; i < P; ++i) {
            const auto& p1 = pop[tournament()];
            const auto& p2 = pop[tournament()];
            std::vector<int> child;
            if (rng.next_double() < config.ga_crossover_rate) {
                int c1 = int(rng.next_below(static_cast<std::size_t>(n)));
                int c2 = int(rng.next_below(static_cast<std::size_t>(n)));
                if (c1 > c2) std::swap(c1, c2);
                child = order_crossover(p1, p2, c1, c2);
            } else {
                child = p1;
            }
            if (rng.next_double() < config.ga_mutation_rate) swap_mutate(child, rng);
            next[std::size_t(i)] = std::move(child);
        }
        pop = std::move(next);
        for (int i = 0; i < P; ++i) {
            fitness[std::size_t(i)] = dist.tour_length(pop[std::size_t(i)]);
            if (fitness[std::size_t(i)] < best_len) {
                best_len = fitness[std::size_t(i)];
                best_tour = pop[std::size_t(i)];
            }
        }
        report.best_by_iteration.push_back(best_len);
    }

    report.best.order = best_tour;
    report.best.length_cache = best_len;
    report.best_length = best_len;
    report.final_mean_population =
        std::accumulate(fitness.begin(), fitness.end(), 0.0) / double(P);
    report.wall_ms = elapsed_ms(start);
    return report;
}

TrialReport pso_run(const TspInstance& inst, const EvoConfig& config,
                    RngStream& rng) {
    validate_config(config);
    const auto start = Clock::now();
    const int n = inst.size();
    const int P = config.population_size;
    DistanceCache dist(inst, DistanceMode::EuclideanExact);

    struct Particle {
        std::vector<int> position;
        std::vector<std::pair<int, int>> velocity;
        std::vector<int> pbest;
        double pbest_len = 0.0;
    };
    std::vector<Particle> swarm(static_cast<std::size_t>(P));
    std::vector<int> gbest;
    double gbest_len = std::numeric_limits<double>::infinity();
    for (auto& p : swarm) {
        p.position = random_permutation(n, rng);
        p.pbest = p.position;
        p.pbest_len = dist.tour_length(p.position);
        if (p.pbest_len < gbest_len) {
            gbest_len = p.pbest_len;
            gbest = p.pbest;
        }
    }

    TrialReport report;
    report.seed = rng.seed();
    report.initial_best = gbest_len;
    report.best_by_iteration.push_back(gbest_len);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        for (auto& p : swarm) {
            std::vector<std::pair<int, int>> vel;
            for (const auto& s : p.velocity)
                if (rng.next_double() < config.pso_w) vel.push_back(s);
            for (const auto& s : swap_sequence(p.position, p.pbest))
                if (rng.next_double() < config.pso_c1) vel.push_back(s);
            for (const auto& s : swap_sequence(p.position, gbest))
                if (rng.next_double() < config.pso_c2) vel.push_back(s);
            p.velocity = std::move(vel);
            apply_swaps(p.position, p.velocity);
            const double len = dist.tour_length(p.position);
            if (len < p.pbest_len) {
                p.pbest_len = len;
                p.pbest = p.position;
            }
            if (len < gbest_len) {
                gbest_len = len;
                gbest = p.position;
            }
        }
        report.best_by_iteration.push_back(gbest_len);
    }

    report.best.order = gbest;
    report.best.length_cache = gbest_len;
    report.best_length = gbest_len;
    double mean = 0.0;
    for (const auto& p : swarm) mean += dist.tour_length(p.position);
    report.final_mean_population = mean / double(P);
    report.wall_ms = elapsed_ms(start);
    return report;
}

TrialReport ia_run(const TspInstance& inst, const EvoConfig& config,
                   RngStream& rng) {
    validate_config(config);
    const auto start = Clock::now();
    const int n = inst.size();
    const int P = config.population_size;
    DistanceCache dist(inst, DistanceMode::EuclideanExact);

    std::vector<std::vector<int>> pop(static_cast<std::size_t>(P));
    std::vector<double> length(static_cast<std::size_t>(P));
    for (int i = 0; i < P; ++i) {
        pop[std::size_t(i)] = random_permutation(n, rng);
        length[std::size_t(i)] = dist.tour_length(pop[std::size_t(i)]);
    }

    TrialReport report;
    report.seed = rng.seed();
    auto best_it = std::min_element(length.begin(), length.end());
    std::vector<int> best_tour = pop[std::size_t(best_it - length.begin())];
    double best_len = *best_it;
    report.initial_best = best_len;
    report.best_by_iteration.push_back(best_len);

    const int immigrants = std::max(1, int(std::lround(config.ia_immigrant_fraction * P)));

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        // affinity, min-max normalized
        double aff_min = std::numeric_limits<double>::infinity(), aff_max = 0.0;
        std::vector<double> affinity(static_cast<std::size_t>(P));
        for (int i = 0; i < P; ++i) {
            affinity[std::size_t(i)] = 1.0 / length[std::size_t(i)];
            aff_min = std::min(aff_min, affinity[std::size_t(i)]);
            aff_max = std::max(aff_max, affinity[std::size_t(i)]);
        }
        const double span = aff_max - aff_min;
        // concentration: fraction of peers (self included) above the
        // similarity threshold
        std::vector<double> concentration(static_cast<std::size_t>(P), 0.0);
        for (int i = 0; i < P; ++i)
            for (int j = i; j < P; ++j) {
                const double sim =
                    (i == j) ? 1.0 : tour_similarity(pop[std::size_t(i)], pop[std::size_t(j)]);
                if (sim > config.ia_affinity_threshold) {
                    concentration[std::size_t(i)] += 1.0;
                    if (j != i) concentration[std::size_t(j)] += 1.0;
                }
            }
        std::vector<double> score(static_cast<std::size_t>(P));
        std::vector<int> rank(static_cast<std::size_t>(P));
        for (int i = 0; i < P; ++i) {
            concentration[std::size_t(i)] /= double(P);
            const double naff =
                span > 0.0 ? (affinity[std::size_t(i)] - aff_min) / span : 1.0;
            score[std::size_t(i)] = config.ia_concentration_weight * naff +
                                    (1.0 - config.ia_concentration_weight) *
                                        (1.0 - concentration[std::size_t(i)]);
            rank[std::size_t(i)] = i;
        }
        std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
            return score[std::size_t(a)] > score[std::size_t(b)];
        });

        // rank-proportional cloning of the top fifth
        const int selected = std::max(1, P / 5);
        const int clone_slots = P - immigrants - 1;
        std::vector<std::vector<int>> next;
        next.reserve(static_cast<std::size_t>(P));
        next.push_back(best_tour);  // keep the best antibody unmutated
        double weight_total = 0.0;
        for (int r = 0; r < selected; ++r) weight_total += double(selected - r);
        int produced = 0;
        for (int r = 0; r < selected && produced < clone_slots; ++r) {
            int clones = int(std::lround(double(selected - r) / weight_total *
                                         double(clone_slots)));
            if (r == selected - 1) clones = clone_slots - produced;
            clones = std::min(clones, clone_slots - produced);
            for (int c = 0; c < clones; ++c) {
                std::vector<int> clone = pop[std::size_t(rank[std::size_t(r)])];
                if (rng.next_double() < config.ia_mutation_rate)
                    swap_mutate(clone, rng);
                next.push_back(std::move(clone));
                ++produced;
            }
        }
        while (produced < clone_slots) {
            std::vector<int> clone = pop[std::size_t(rank[0])];
            swap_mutate(clone, rng);
            next.push_back(std::move(clone));
            ++produced;
        }
        for (int i = 0; i < immigrants; ++i)
            next.push_back(random_permutation(n, rng));

        pop = std::move(next);
        for (int i = 0; i < P; ++i) {
            length[std::size_t(i)] = dist.tour_length(pop[std::size_t(i)]);
            if (length[std::size_t(i)] < best_len) {
                best_len = length[std::size_t(i)];
                best_tour = pop[std::size_t(i)];
            }
        }
        report.best_by_iteration.push_back(best_len);
    }

    report.best.order = best_tour;
    report.best.length_cache = best_len;
    report.best_length = best_len;
    report.final_mean_population =
        std::accumulate(length.begin(), length.end(), 0.0) / double(P);
    report.wall_ms = elapsed_ms(start);
    return report;
}

void write_trial_csv(std::ostream& out, const TrialReport& report) {
    out.precision(17);
    out << "iteration,best_length\n";
    for (std::size_t i = 0; i < report.best_by_iteration.size(); ++i)
        out << i << "," << report.best_by_iteration[i] << "\n";
    out << "seed,final_best,final_mean_population,wall_ms\n";
    out << report.seed << "," << report.best_length << ","
        << report.final_mean_population << "," << report.wall_ms << "\n";
}

}  // namespace cctsp

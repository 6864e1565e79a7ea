#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cctsp/pipeline.hpp"
#include "cctsp/tsp.hpp"

namespace cctsp {

struct EvoConfig {
    int population_size = 100;
    int max_iterations = 500;
    // GA
    double ga_mutation_rate = 0.01;
    double ga_crossover_rate = 0.9;
    int tournament_size = 3;
    // PSO (swap-sequence velocities)
    double pso_w = 0.8;
    double pso_c1 = 0.1;
    double pso_c2 = 0.1;
    // IA (clonal selection)
    double ia_mutation_rate = 0.01;
    double ia_affinity_threshold = 0.7;
    double ia_concentration_weight = 0.95;
    double ia_immigrant_fraction = 0.05;
    std::uint64_t seed = 1;
};

struct TrialReport {
    std::vector<double> best_by_iteration;  // best-ever after each iteration
    Tour best;
    double best_length = 0.0;
    double initial_best = 0.0;  // best of the initial population
    double final_mean_population = 0.0;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;
};

// Tournament selection (size 3), order crossover with probability 0.9, swap
// mutation per individual, generational replacement with 1-elitism. An elite
// tour, when given, replaces individual 0 of the random initial population.
TrialReport ga_run(const TspInstance& inst, const EvoConfig& config,
                   const std::optional<EliteTour>& elite, RngStream& rng);

// Discrete PSO over permutations: velocity is a list of index swaps; each
// retained old swap (prob w) is followed by swaps drawn from (pbest - pos)
// with prob c1 and (gbest - pos) with prob c2.
TrialReport pso_run(const TspInstance& inst, const EvoConfig& config, RngStream& rng);

// Clonal selection: affinity 1/length, concentration from pairwise
// shared-edge similarity above the threshold, rank-proportional cloning with
// swap mutation and random immigrant replacement.
TrialReport ia_run(const TspInstance& inst, const EvoConfig& config, RngStream& rng);

// Order crossover: child keeps parent1's segment [cut1, cut2] in place and
// fills the remaining slots left to right with the missing cities in
// parent2's order.
std::vector<int> order_crossover(const std::vector<int>& parent1,
                                 const std::vector<int>& parent2, int cut1, int cut2);

// Swap sequence taking `from` to `to`; applying it to `from` yields `to`.
std::vector<std::pair<int, int>> swap_sequence(const std::vector<int>& from,
                                               const std::vector<int>& to);
void apply_swaps(std::vector<int>& order,
                 const std::vector<std::pair<int, int>>& swaps);

// Shared undirected edges / N.
double tour_similarity(const std::vector<int>& a, const std::vector<int>& b);

std::vector<int> random_permutation(int n, RngStream& rng);

// CSV: "iteration,best_length" rows then a summary line
// "seed,final_best,final_mean_population,wall_ms".
void write_trial_csv(std::ostream& out, const TrialReport& report);

}  // namespace cctsp

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cctsp/evo.hpp"
#include "cctsp/trainer.hpp"

namespace cctsp {

struct BenchConfig {
    std::vector<std::string> instance_paths;
    int gen_count = 0;  // additional generated uniform instances
    int gen_n = 1000;
    std::vector<std::string> algorithms;  // ga, pso, ia, ccpnrl-ga
    int trials = 30;
    EvoConfig evo;
    int k = 20;
    std::string checkpoint_path;          // required for ccpnrl-ga with ptrnet
    std::string subsolver = "ptrnet";     // ptrnet|held-karp|nearest-neighbor|two-opt
    int ptrnet_samples = 1;
    bool two_opt_polish = false;
    std::string out_dir = "bench_out";
    std::uint64_t master_seed = 1;
    int workers = 1;
};

struct CellStats {
    std::string instance, algorithm;
    double mean_final = 0.0;
    double optimal_final = 0.0;
    double stddev_final = 0.0;
    double mean_wall_ms = 0.0;
    double mean_stage1_ms = 0.0;  // stage-one share for ccpnrl-ga, else 0
    int trials_done = 0;
    std::string error;  // non-empty if the cell failed
};

struct BenchSummary {
    std::vector<CellStats> cells;
    bool all_ok = true;
};

// trial_seed = mix64(mix64(mix64(mix64(master) ^ fnv1a(instance)) ^
// fnv1a(algorithm)) ^ trial_index); every trial is fully determined by the
// master seed and the cell coordinates.
std::uint64_t trial_seed(std::uint64_t master, const std::string& instance,
                         const std::string& algorithm, int trial);

struct TrialOutcome {
    TrialReport report;
    double stage1_ms = 0.0;
    std::optional<EliteTour> elite;
};

// Runs one algorithm trial on one instance; for ccpnrl-ga, `actor` must be
// the trained model when subsolver is "ptrnet".
TrialOutcome run_trial(const TspInstance& inst, const std::string& algorithm,
                       const EvoConfig& evo, int k, const std::string& subsolver,
                       const PtrNetModel* actor, int ptrnet_samples,
                       bool two_opt_polish, std::uint64_t seed);

// Cross product of instances x algorithms x trials; per-trial curve CSVs and
// summary.csv under out_dir (atomic temp+rename writes). Partial failures
// are recorded per cell and the run continues.
BenchSummary run_bench(const BenchConfig& config);

void write_summary_csv(std::ostream& out, const BenchSummary& summary);

// Recomputes each cell's statistics from the per-trial curve files and
// compares them with summary.csv. Returns true when everything matches.
bool check_bench_output(const std::string& out_dir, std::ostream& diagnostics);

std::string curve_file_name(const std::string& instance,
                            const std::string& algorithm, int trial);

}  // namespace cctsp

#include "cctsp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

namespace cctsp {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                   ? c
                   : '_';
    return out;
}

void atomic_write(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
    }
    fs::rename(tmp, path);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, const std::string& instance,
                         const std::string& algorithm, int trial) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ fnv1a64(instance));
    h = mix64(h ^ fnv1a64(algorithm));
    return mix64(h ^ std::uint64_t(trial));
}

std::string curve_file_name(const std::string& instance,
                            const std::string& algorithm, int trial) {
    return sanitize(instance) + "_" + sanitize(algorithm) + "_trial" +
           std::to_string(trial) + ".csv";
}

TrialOutcome run_trial(const TspInstance& inst, const std::string& algorithm,
                       const EvoConfig& evo, int k, const std::string& subsolver,
                       const PtrNetModel* actor, int ptrnet_samples,
                       bool two_opt_polish, std::uint64_t seed) {
    RngStream rng(seed);
    TrialOutcome outcome;
    if (algorithm == "ga") {
        outcome.report = ga_run(inst, evo, std::nullopt, rng);
    } else if (algorithm == "pso") {
        outcome.report = pso_run(inst, evo, rng);
    } else if (algorithm == "ia") {
        outcome.report = ia_run(inst, evo, rng);
    } else if (algorithm == "ccpnrl-ga") {
        const auto t0 = std::chrono::steady_clock::now();
        std::unique_ptr<SubSolver> solver;
        if (subsolver == "ptrnet") {
            if (!actor) throw Error("ccpnrl-ga with ptrnet sub-solver needs a checkpoint");
            solver = std::make_unique<PtrNetSolver>(*actor, ptrnet_samples);
        } else if (subsolver == "held-karp") {
            solver = std::make_unique<HeldKarpSolver>();
        } else if (subsolver == "nearest-neighbor") {
            solver = std::make_unique<NearestNeighborSolver>();
        } else if (subsolver == "two-opt") {
            solver = std::make_unique<TwoOptSolver>();
        } else {
            throw Error("unknown sub-solver: " + subsolver);
        }
        RngStream stage1_rng = rng.split(0xe117e);
        EliteTour elite = build_elite(inst, k, *solver, stage1_rng, two_opt_polish);
        outcome.stage1_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        RngStream ga_rng = rng.split(0x6a);
        outcome.report = ga_run(inst, evo, elite, ga_rng);
        outcome.elite = std::move(elite);
    } else {
        throw Error("unknown algorithm: " + algorithm);
    }
    return outcome;
}

BenchSummary run_bench(const BenchConfig& config) {
    if (config.trials < 1) throw Error("trials must be >= 1");
    fs::create_directories(config.out_dir);

    std::vector<TspInstance> instances;
    for (const auto& path : config.instance_paths)
        instances.push_back(load_instance(path));
    RngStream gen_rng = RngStream(config.master_seed).split(0x9e4);
    for (int i = 0; i < config.gen_count; ++i) {
        RngStream r = gen_rng.split(std::uint64_t(i));
        TspInstance inst = generate_uniform_instance(config.gen_n, r);
        inst.name = "gen" + std::to_string(config.gen_n) + "-" + std::to_string(i);
        instances.push_back(std::move(inst));
    }
    if (instances.empty()) throw Error("no instances given");
    if (config.algorithms.empty()) throw Error("no algorithms given");

    std::optional<Checkpoint> ckpt;
    const bool needs_ckpt =
        config.subsolver == "ptrnet" &&
        std::find(config.algorithms.begin(), config.algorithms.end(), "ccpnrl-ga") !=
            config.algorithms.end();
    if (needs_ckpt) {
        if (config.checkpoint_path.empty())
            throw Error("ccpnrl-ga requires --ckpt with the ptrnet sub-solver");
        ckpt = load_checkpoint(config.checkpoint_path);
    }

    struct Task {
        std::size_t inst_idx, cell_idx;
        std::string algorithm;
        int trial;
    };
    std::vector<Task> tasks;
    BenchSummary summary;
    for (const auto& inst : instances) {
        for (const auto& alg : config.algorithms) {
            CellStats cell;
            cell.instance = inst.name;
            cell.algorithm = alg;
            const std::size_t cell_idx = summary.cells.size();
            summary.cells.push_back(cell);
            for (int t = 0; t < config.trials; ++t)
                tasks.push_back({std::size_t(&inst - instances.data()), cell_idx, alg, t});
        }
    }

    struct TrialResult {
        double final_best = 0.0, wall_ms = 0.0, stage1_ms = 0.0;
        bool ok = false;
        std::string error;
    };
    std::vector<TrialResult> results(tasks.size());

    std::atomic<std::size_t> next_task{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next_task.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            TrialResult& res = results[i];
            try {
                const TspInstance& inst = instances[task.inst_idx];
                const std::uint64_t seed =
                    trial_seed(config.master_seed, inst.name, task.algorithm, task.trial);
                TrialOutcome out = run_trial(inst, task.algorithm, config.evo,
                                             config.k, config.subsolver,
                                             ckpt ? &ckpt->actor : nullptr,
                                             config.ptrnet_samples,
                                             config.two_opt_polish, seed);
                std::ostringstream csv;
                write_trial_csv(csv, out.report);
                atomic_write(fs::path(config.out_dir) /
                                 curve_file_name(inst.name, task.algorithm, task.trial),
                             csv.str());
                res.final_best = out.report.best_length;
                res.wall_ms = out.report.wall_ms;
                res.stage1_ms = out.stage1_ms;
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };
    const int n_workers = std::max(1, config.workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CellStats& cell = summary.cells[tasks[i].cell_idx];
        const TrialResult& res = results[i];
        if (!res.ok) {
            if (cell.error.empty()) cell.error = res.error;
            summary.all_ok = false;
            continue;
        }
        ++cell.trials_done;
        cell.mean_final += res.final_best;
        cell.mean_wall_ms += res.wall_ms;
        cell.mean_stage1_ms += res.stage1_ms;
        if (cell.trials_done == 1 || res.final_best < cell.optimal_final)
            cell.optimal_final = res.final_best;
    }
    for (CellStats& cell : summary.cells) {
        if (cell.trials_done == 0) continue;
        cell.mean_final /= cell.trials_done;
        cell.mean_wall_ms /= cell.trials_done;
        cell.mean_stage1_ms /= cell.trials_done;
    }
    // second pass for the standard deviation of final bests
    std::vector<double> sq(summary.cells.size(), 0.0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!results[i].ok) continue;
        const CellStats& cell = summary.cells[tasks[i].cell_idx];
        const double d = results[i].final_best - cell.mean_final;
        sq[tasks[i].cell_idx] += d * d;
    }
    for (std::size_t c = 0; c < summary.cells.size(); ++c)
        if (summary.cells[c].trials_done > 0)
            summary.cells[c].stddev_final =
                std::sqrt(sq[c] / summary.cells[c].trials_done);

    std::ostringstream csv;
    write_summary_csv(csv, summary);
    atomic_write(fs::path(config.out_dir) / "summary.csv", csv.str());
    return summary;
}

void write_summary_csv(std::ostream& out, const BenchSummary& summary) {
    out.precision(17);
    out << "instance,algorithm,trials,mean_final,optimal_final,stddev_final,"
           "mean_wall_ms,mean_stage1_ms,error\n";
    for (const CellStats& c : summary.cells)
        out << c.instance << "," << c.algorithm << "," << c.trials_done << ","
            << c.mean_final << "," << c.optimal_final << "," << c.stddev_final
            << "," << c.mean_wall_ms << "," << c.mean_stage1_ms << "," << c.error
            << "\n";
}

bool check_bench_output(const std::string& out_dir, std::ostream& diagnostics) {
    std::ifstream sum(fs::path(out_dir) / "summary.csv");
    if (!sum) {
        diagnostics << "missing summary.csv in " << out_dir << "\n";
        return false;
    }
    std::string line;
    std::getline(sum, line);  // header
    bool ok = true;
    while (std::getline(sum, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string instance, algorithm, field;
        std::getline(ls, instance, ',');
        std::getline(ls, algorithm, ',');
        std::getline(ls, field, ',');
        const int trials = std::stoi(field);
        std::getline(ls, field, ',');
        const double mean_final = std::stod(field);
        std::getline(ls, field, ',');
        const double optimal_final = std::stod(field);

        double sum_best = 0.0, min_best = 0.0;
        int found = 0;
        for (int t = 0;; ++t) {
            std::ifstream curve(fs::path(out_dir) /
                                curve_file_name(instance, algorithm, t));
            if (!curve) break;
            // final best is in the summary line: seed,final_best,...
            std::string row, last, prev;
            while (std::getline(curve, row)) {
                prev = last;
                last = row;
            }
            std::istringstream rs(last);
            std::string seed_s, best_s;
            std::getline(rs, seed_s, ',');
            std::getline(rs, best_s, ',');
            const double best = std::stod(best_s);
            sum_best += best;
            min_best = (found == 0) ? best : std::min(min_best, best);
            ++found;
        }
        if (found != trials) {
            diagnostics << instance << "/" << algorithm << ": " << found
                        << " curve files, summary says " << trials << "\n";
            ok = false;
            continue;
        }
        if (found == 0) continue;
        const double mean = sum_best / found;
        if (std::abs(mean - mean_final) > 1e-9 * std::max(1.0, std::abs(mean)) ||
            std::abs(min_best - optimal_final) >
                1e-9 * std::max(1.0, std::abs(min_best))) {
            diagnostics << instance << "/" << algorithm
                        << ": recomputed mean/min " << mean << "/" << min_best
                        << " vs summary " << mean_final << "/" << optimal_final
                        << "\n";
            ok = false;
        }
    }
    return ok;
}

}  // namespace cctsp

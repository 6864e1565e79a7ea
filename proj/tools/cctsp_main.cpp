#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cctsp/bench.hpp"
#include "cctsp/decompose.hpp"
#include "cctsp/evo.hpp"
#include "cctsp/pipeline.hpp"
#include "cctsp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply_train_preset(cctsp::TrainConfig& cfg, const std::string& preset) {
    if (preset == "paper") {
        cfg.batch_size = 64;
        cfg.hidden_dim = 128;
        cfg.embed_dim = 128;
        cfg.n_cities = 20;
        cfg.max_steps = 20000;
        cfg.adam_actor = {};
        cfg.adam_critic = {};
    } else if (preset == "desk") {
        cfg.batch_size = 64;
        cfg.hidden_dim = 128;
        cfg.embed_dim = 128;
        cfg.n_cities = 20;
        cfg.max_steps = 5000;
    } else if (preset == "quick") {
        cfg.batch_size = 64;
        cfg.hidden_dim = 64;
        cfg.embed_dim = 64;
        cfg.n_cities = 20;
        cfg.max_steps = 2000;
    } else if (!preset.empty()) {
        throw cctsp::Error("unknown preset: " + preset);
    }
}

std::string out_dir_default() {
    const char* env = std::getenv("CCTSP_OUT_DIR");
    return env ? env : "bench_out";
}

void write_manifest(const fs::path& dir, const json& j) {
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage large-scale TSP solver: cluster decomposition with a "
                 "pointer-network stage feeding an elite tour into a GA, plus "
                 "GA/PSO/IA baselines and a benchmark harness"};
    app.require_subcommand(1);

    // ---- train ----------------------------------------------------------
    cctsp::TrainConfig tcfg;
    std::string t_out = "model.ckpt", t_log = "train_log.csv", t_preset;
    auto* train_cmd = app.add_subcommand("train", "train the actor/critic on random instances");
    train_cmd->add_option("--steps", tcfg.max_steps, "training steps");
    train_cmd->add_option("--batch", tcfg.batch_size, "mini-batch size");
    train_cmd->add_option("--cities", tcfg.n_cities, "cities per training instance");
    train_cmd->add_option("--hidden", tcfg.hidden_dim, "LSTM hidden units");
    train_cmd->add_option("--embed", tcfg.embed_dim, "embedding dimension");
    train_cmd->add_option("--lr", tcfg.adam_actor.lr0, "initial learning rate");
    train_cmd->add_option("--decay-every", tcfg.adam_actor.decay_every, "lr decay interval");
    train_cmd->add_option("--decay-factor", tcfg.adam_actor.decay_factor, "lr decay factor");
    train_cmd->add_option("--clip", tcfg.grad_clip, "global gradient-norm clip");
    train_cmd->add_option("--eval-every", tcfg.eval_every, "evaluation interval");
    train_cmd->add_option("--eval-set", tcfg.eval_set_size, "held-out set size");
    train_cmd->add_option("--seed", tcfg.seed, "master seed");
    train_cmd->add_option("--out", t_out, "checkpoint output path");
    train_cmd->add_option("--log", t_log, "training-log CSV path");
    train_cmd->add_option("--preset", t_preset, "paper|desk|quick");

    // ---- solve ----------------------------------------------------------
    std::string s_alg = "ccpnrl-ga", s_inst, s_ckpt, s_subsolver = "ptrnet";
    std::string s_tour = "tour.txt", s_curve = "curve.csv";
    cctsp::EvoConfig s_evo;
    int s_k = 20, s_samples = 1;
    std::uint64_t s_seed = 1;
    bool s_polish = false, s_rounded = false;
    auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
    solve_cmd->add_option("--alg", s_alg, "ga|pso|ia|ccpnrl-ga");
    solve_cmd->add_option("--inst", s_inst, "TSPLIB instance file")->required();
    solve_cmd->add_option("--ckpt", s_ckpt, "pointer-network checkpoint");
    solve_cmd->add_option("--subsolver", s_subsolver,
                          "ptrnet|held-karp|nearest-neighbor|two-opt");
    solve_cmd->add_option("--samples", s_samples, "sampled decodes per cluster (best kept)");
    solve_cmd->add_option("--k", s_k, "cluster size");
    solve_cmd->add_option("--pop", s_evo.population_size, "population size");
    solve_cmd->add_option("--iters", s_evo.max_iterations, "max iterations");
    solve_cmd->add_option("--mutation", s_evo.ga_mutation_rate, "GA mutation rate");
    solve_cmd->add_option("--seed", s_seed, "seed");
    solve_cmd->add_option("--out-tour", s_tour, "tour output file");
    solve_cmd->add_option("--out-curve", s_curve, "convergence CSV");
    solve_cmd->add_flag("--two-opt-polish", s_polish, "2-opt polish of sub-tours");
    solve_cmd->add_flag("--rounded", s_rounded, "also report TSPLIB rounded length");

    // ---- bench ----------------------------------------------------------
    cctsp::BenchConfig bcfg;
    bcfg.out_dir = out_dir_default();
    std::string b_preset;
    auto* bench_cmd = app.add_subcommand("bench", "instances x algorithms x trials");
    bench_cmd->add_option("--inst", bcfg.instance_paths, "TSPLIB instance files");
    bench_cmd->add_option("--gen-count", bcfg.gen_count, "generated uniform instances");
    bench_cmd->add_option("--gen-n", bcfg.gen_n, "cities per generated instance");
    bench_cmd->add_option("--algs", bcfg.algorithms, "algorithms to run")
        ->default_val(std::vector<std::string>{"ccpnrl-ga", "ga", "pso", "ia"});
    bench_cmd->add_option("--trials", bcfg.trials, "trials per cell");
    bench_cmd->add_option("--k", bcfg.k, "cluster size");
    bench_cmd->add_option("--ckpt", bcfg.checkpoint_path, "checkpoint for ccpnrl-ga");
    bench_cmd->add_option("--subsolver", bcfg.subsolver, "stage-one sub-solver");
    bench_cmd->add_option("--pop", bcfg.evo.population_size, "population size");
    bench_cmd->add_option("--iters", bcfg.evo.max_iterations, "max iterations");
    bench_cmd->add_option("--mutation", bcfg.evo.ga_mutation_rate, "GA mutation rate");
    bench_cmd->add_option("--out-dir", bcfg.out_dir, "output directory (env CCTSP_OUT_DIR)");
    bench_cmd->add_option("--seed", bcfg.master_seed, "master seed");
    bench_cmd->add_option("--workers", bcfg.workers, "parallel workers");
    bench_cmd->add_option("--preset", b_preset, "'paper' sets pop=100 iters=500 trials=30 k=20");

    // ---- check ----------------------------------------------------------
    std::string c_dir = out_dir_default();
    auto* check_cmd = app.add_subcommand("check", "verify summary.csv against per-trial files");
    check_cmd->add_option("--dir", c_dir, "bench output directory");

    // ---- decompose ------------------------------------------------------
    std::string d_inst, d_out = "clusters.csv";
    int d_k = 20;
    auto* dec_cmd = app.add_subcommand("decompose", "export the clustering as CSV");
    dec_cmd->add_option("--inst", d_inst, "TSPLIB instance file")->required();
    dec_cmd->add_option("--k", d_k, "cluster size");
    dec_cmd->add_option("--out", d_out, "CSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            // preset supplies defaults; explicit flags take precedence
            cctsp::TrainConfig user = tcfg;
            apply_train_preset(tcfg, t_preset);
            if (train_cmd->count("--steps")) tcfg.max_steps = user.max_steps;
            if (train_cmd->count("--batch")) tcfg.batch_size = user.batch_size;
            if (train_cmd->count("--cities")) tcfg.n_cities = user.n_cities;
            if (train_cmd->count("--hidden")) tcfg.hidden_dim = user.hidden_dim;
            if (train_cmd->count("--embed")) tcfg.embed_dim = user.embed_dim;
            if (train_cmd->count("--lr")) tcfg.adam_actor.lr0 = user.adam_actor.lr0;
            if (train_cmd->count("--decay-every"))
                tcfg.adam_actor.decay_every = user.adam_actor.decay_every;
            if (train_cmd->count("--decay-factor"))
                tcfg.adam_actor.decay_factor = user.adam_actor.decay_factor;
            tcfg.adam_critic = tcfg.adam_actor;
            cctsp::TrainResult result = cctsp::train(tcfg);
            cctsp::save_checkpoint(result.actor, result.critic, tcfg,
                                   tcfg.max_steps, t_out);
            std::ofstream log(t_log);
            cctsp::write_train_log_csv(log, result.log);
            if (!result.log.records.empty())
                std::cout << "final greedy mean length: "
                          << result.log.records.back().greedy_mean << "\n";
            std::cout << "checkpoint written to " << t_out << "\n";
            return 0;
        }

        if (*solve_cmd) {
            cctsp::TspInstance inst = cctsp::load_instance(s_inst);
            std::optional<cctsp::Checkpoint> ckpt;
            if (s_alg == "ccpnrl-ga" && s_subsolver == "ptrnet") {
                if (s_ckpt.empty())
                    throw cctsp::Error("--ckpt required for ccpnrl-ga with ptrnet");
                ckpt = cctsp::load_checkpoint(s_ckpt);
            }
            cctsp::TrialOutcome out = cctsp::run_trial(
                inst, s_alg, s_evo, s_k, s_subsolver,
                ckpt ? &ckpt->actor : nullptr, s_samples, s_polish, s_seed);
            {
                std::ofstream tf(s_tour);
                cctsp::write_tour_file(tf, inst.name, out.report.best);
            }
            {
                std::ofstream cf(s_curve);
                cctsp::write_trial_csv(cf, out.report);
            }
            std::cout << "final length: " << out.report.best_length << "\n";
            if (s_rounded)
                std::cout << "rounded length: "
                          << cctsp::tour_length(inst, out.report.best,
                                                cctsp::DistanceMode::EuclideanRounded)
                          << "\n";
            if (out.elite)
                std::cout << "elite length: " << *out.elite->tour.length_cache
                          << " (stage one " << out.stage1_ms << " ms, "
                          << out.elite->provenance << ")\n";
            if (inst.known_optimum)
                std::cout << "ratio to optimum: "
                          << out.report.best_length / *inst.known_optimum << "\n";
            return 0;
        }

        if (*bench_cmd) {
            if (b_preset == "paper") {
                // preset supplies defaults; explicit flags take precedence
                if (!bench_cmd->count("--pop")) bcfg.evo.population_size = 100;
                if (!bench_cmd->count("--iters")) bcfg.evo.max_iterations = 500;
                if (!bench_cmd->count("--trials")) bcfg.trials = 30;
                if (!bench_cmd->count("--k")) bcfg.k = 20;
            } else if (!b_preset.empty()) {
                throw cctsp::Error("unknown preset: " + b_preset);
            }
            json manifest;
            manifest["master_seed"] = bcfg.master_seed;
            manifest["trials"] = bcfg.trials;
            manifest["algorithms"] = bcfg.algorithms;
            manifest["instances"] = bcfg.instance_paths;
            manifest["gen_count"] = bcfg.gen_count;
            manifest["gen_n"] = bcfg.gen_n;
            manifest["k"] = bcfg.k;
            manifest["subsolver"] = bcfg.subsolver;
            manifest["pop"] = bcfg.evo.population_size;
            manifest["iters"] = bcfg.evo.max_iterations;
            manifest["checkpoint"] = bcfg.checkpoint_path;
            manifest["format_version"] = 1;
            write_manifest(bcfg.out_dir, manifest);
            cctsp::BenchSummary summary = cctsp::run_bench(bcfg);
            for (const auto& cell : summary.cells) {
                std::cout << cell.instance << " " << cell.algorithm << ": ";
                if (cell.error.empty())
                    std::cout << "mean " << cell.mean_final << " best "
                              << cell.optimal_final << " (" << cell.trials_done
                              << " trials)\n";
                else
                    std::cout << "FAILED: " << cell.error << "\n";
            }
            std::cout << "summary written to " << bcfg.out_dir << "/summary.csv\n";
            return summary.all_ok ? 0 : 1;
        }

        if (*check_cmd) {
            const bool ok = cctsp::check_bench_output(c_dir, std::cerr);
            std::cout << (ok ? "summary matches per-trial files\n"
                             : "summary MISMATCH\n");
            return ok ? 0 : 1;
        }

        if (*dec_cmd) {
            cctsp::TspInstance inst = cctsp::load_instance(d_inst);
            cctsp::Decomposition d = cctsp::variant_knn(inst, d_k);
            std::ofstream out(d_out);
            cctsp::write_decomposition_csv(out, d);
            std::cout << d.clusters.size() << " clusters written to " << d_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

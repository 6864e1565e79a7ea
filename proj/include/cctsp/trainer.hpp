#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cctsp/nn.hpp"
#include "cctsp/ptrnet.hpp"

namespace cctsp {

struct TrainConfig {
    int batch_size = 64;
    int n_cities = 20;
    long max_steps = 5000;
    int embed_dim = 128;
    int hidden_dim = 128;
    int process_rounds = 3;
    nn::AdamConfig adam_actor;
    nn::AdamConfig adam_critic;
    double grad_clip = 2.0;
    long eval_every = 100;
    int eval_set_size = 256;
    std::uint64_t seed = 1;
};

struct TrainRecord {
    long step = 0;
    double sample_mean = 0.0;
    double greedy_mean = 0.0;
    double critic_loss = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

struct BatchStats {
    double mean_length = 0.0;
    double critic_loss = 0.0;
    double mean_advantage = 0.0;
};

// One actor-critic update on a batch: sample a tour per instance, advantage
// against the critic prediction (treated as constant for the actor), MSE
// update for the critic, global-norm clip, Adam for both.
BatchStats reinforce_step(PtrNetModel& actor, CriticModel& critic,
                          const std::vector<std::vector<Point>>& batch,
                          nn::Adam& actor_opt, nn::Adam& critic_opt,
                          double grad_clip, RngStream& rng);

struct TrainResult {
    PtrNetModel actor;
    CriticModel critic;
    TrainLog log;
};

TrainResult train(const TrainConfig& config);

// Mean greedy / sampled tour length over a fixed evaluation set.
double eval_greedy_mean(const PtrNetModel& actor,
                        const std::vector<std::vector<Point>>& eval_set);
double eval_sample_mean(const PtrNetModel& actor,
                        const std::vector<std::vector<Point>>& eval_set,
                        RngStream& rng);

// "CCPN1" checkpoint: text header with dims and config, then little-endian
// 64-bit floats per named parameter block in a fixed order (see
// docs/formats.md).
void save_checkpoint(const PtrNetModel& actor, const CriticModel& critic,
                     const TrainConfig& config, long step, const std::string& path);

struct Checkpoint {
    PtrNetModel actor;
    CriticModel critic;
    TrainConfig config;
    long step = 0;
};

Checkpoint load_checkpoint(const std::string& path);

// CSV "step,sample_mean,greedy_mean,critic_loss"
void write_train_log_csv(std::ostream& out, const TrainLog& log);

}  // namespace cctsp

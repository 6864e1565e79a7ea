#pragma once

#include <vector>

#include "cctsp/nn.hpp"
#include "cctsp/tsp.hpp"

namespace cctsp {

enum class DecodeMode { Greedy, Sample };

// Actor: coordinate embedding, LSTM encoder, LSTM decoder whose attention
// scores point at input positions, with visited-city masking. The decoder's
// first input is a learned start token; scoring is v . tanh(Wref e_i + Wq q).
struct PtrNetModel {
    int embed_dim = 0, hidden_dim = 0;
    nn::Linear embed;   // E x 2
    nn::Lstm encoder;   // in E, hidden H
    nn::Lstm decoder;   // in E, hidden H
    nn::Param attn_ref, attn_q;  // H x H
    nn::Param attn_v;            // H
    nn::Param start_token;       // E

    static PtrNetModel init(int embed_dim, int hidden_dim, RngStream& rng);
    std::vector<nn::Param*> params();
    std::vector<const nn::Param*> params() const;
};

// Critic: embedding + LSTM encoder, an attention process block applied for
// `process_rounds` glimpses over the encoder states, then a 2-layer ReLU MLP
// down to a scalar predicted tour length.
struct CriticModel {
    int embed_dim = 0, hidden_dim = 0, process_rounds = 3;
    nn::Linear embed;
    nn::Lstm encoder;
    nn::Param glimpse_ref, glimpse_q;  // H x H
    nn::Param glimpse_v;               // H
    nn::Linear mlp1;                   // H x H, ReLU
    nn::Linear mlp2;                   // 1 x H

    static CriticModel init(int embed_dim, int hidden_dim, int process_rounds,
                            RngStream& rng);
    std::vector<nn::Param*> params();
    std::vector<const nn::Param*> params() const;
};

struct EncodeCache {
    std::vector<nn::Vec> embeds;           // n x E
    std::vector<nn::LstmCache> steps;      // n
    std::vector<nn::Vec> states;           // encoder hidden per city, n x H
    nn::LstmState final_state;
};

// One decode step's attention intermediates.
struct AttnStepCache {
    nn::Vec query;                 // decoder hidden used as q
    std::vector<nn::Vec> tanh_t;   // n x H (empty rows for masked entries)
    nn::Vec probs;                 // n
    std::vector<char> mask;        // n, pre-choice
    int chosen = -1;
};

struct DecodeCache {
    std::vector<nn::Vec> ref_proj;         // Wref e_i, n x H
    std::vector<nn::LstmCache> dec_steps;  // n
    std::vector<AttnStepCache> attn;       // n
};

struct DecodeResult {
    std::vector<int> permutation;
    double log_prob = 0.0;
    DecodeMode mode = DecodeMode::Greedy;
};

// Runs the encoder over the (normalized, [0,1]^2) coordinates.
EncodeCache encode(const PtrNetModel& model, const std::vector<Point>& coords);

// n pointer steps with masked softmax over unvisited cities. Greedy takes
// the argmax (ties to the lowest index); Sample draws from the distribution.
DecodeResult decode(const PtrNetModel& model, const EncodeCache& enc,
                    DecodeMode mode, RngStream& rng, DecodeCache* cache = nullptr);

// Accumulates d(coef * log p(permutation))/dtheta into model.grad for every
// actor parameter. Needs the caches produced by encode/decode.
void actor_backward(PtrNetModel& model, const std::vector<Point>& coords,
                    const EncodeCache& enc, const DecodeCache& dec,
                    const DecodeResult& result, double coef);

struct CriticCache {
    EncodeCache enc;
    std::vector<nn::Vec> ref_proj;       // n x H
    std::vector<nn::Vec> queries;        // P+1 entries, q_0..q_P
    std::vector<std::vector<nn::Vec>> tanh_t;  // P x n x H
    std::vector<nn::Vec> attn_probs;     // P x n
    nn::Vec mlp_hidden;                  // post-ReLU
};

double critic_forward(const CriticModel& model, const std::vector<Point>& coords,
                      CriticCache* cache = nullptr);

// Accumulates d(dout * output)/dtheta into critic parameter grads.
void critic_backward(CriticModel& model, const std::vector<Point>& coords,
                     const CriticCache& cache, double dout);

// Greedy solve of one subcomponent; when samples > 1, also draws that many
// sampled tours and keeps the best by exact length.
std::vector<int> ptrnet_solve(const PtrNetModel& model,
                              const std::vector<Point>& coords, RngStream& rng,
                              int samples = 1);

}  // namespace cctsp

#include "cctsp/ptrnet.hpp"

#include <algorithm>
#include <cmath>

namespace cctsp {

using nn::Vec;

PtrNetModel PtrNetModel::init(int embed_dim, int hidden_dim, RngStream& rng) {
    PtrNetModel m;
    m.embed_dim = embed_dim;
    m.hidden_dim = hidden_dim;
    m.embed = nn::make_linear(2, embed_dim, rng, "actor.embed");
    m.encoder = nn::make_lstm(embed_dim, hidden_dim, rng, "actor.encoder");
    m.decoder = nn::make_lstm(embed_dim, hidden_dim, rng, "actor.decoder");
    m.attn_ref = nn::Param("actor.attn_ref", hidden_dim, hidden_dim);
    m.attn_q = nn::Param("actor.attn_q", hidden_dim, hidden_dim);
    m.attn_v = nn::Param("actor.attn_v", hidden_dim, 1);
    m.start_token = nn::Param("actor.start_token", embed_dim, 1);
    nn::init_uniform(m.attn_ref, hidden_dim, rng);
    nn::init_uniform(m.attn_q, hidden_dim, rng);
    nn::init_uniform(m.attn_v, hidden_dim, rng);
    nn::init_uniform(m.start_token, 2, rng);
    return m;
}

std::vector<nn::Param*> PtrNetModel::params() {
    return {&embed.w,   &embed.b,   &encoder.wx, &encoder.wh, &encoder.b,
            &decoder.wx, &decoder.wh, &decoder.b,  &attn_ref,   &attn_q,
            &attn_v,    &start_token};
}

std::vector<const nn::Param*> PtrNetModel::params() const {
    auto mut = const_cast<PtrNetModel*>(this)->params();
    return {mut.begin(), mut.end()};
}

CriticModel CriticModel::init(int embed_dim, int hidden_dim, int process_rounds,
                              RngStream& rng) {
    CriticModel m;
    m.embed_dim = embed_dim;
    m.hidden_dim = hidden_dim;
    m.process_rounds = process_rounds;
    m.embed = nn::make_linear(2, embed_dim, rng, "critic.embed");
    m.encoder = nn::make_lstm(embed_dim, hidden_dim, rng, "critic.encoder");
    m.glimpse_ref = nn::Param("critic.glimpse_ref", hidden_dim, hidden_dim);
    m.glimpse_q = nn::Param("critic.glimpse_q", hidden_dim, hidden_dim);
    m.glimpse_v = nn::Param("critic.glimpse_v", hidden_dim, 1);
    nn::init_uniform(m.glimpse_ref, hidden_dim, rng);
    nn::init_uniform(m.glimpse_q, hidden_dim, rng);
    nn::init_uniform(m.glimpse_v, hidden_dim, rng);
    m.mlp1 = nn::make_linear(hidden_dim, hidden_dim, rng, "critic.mlp1");
    m.mlp2 = nn::make_linear(hidden_dim, 1, rng, "critic.mlp2");
    return m;
}

std::vector<nn::Param*> CriticModel::params() {
    return {&embed.w,     &embed.b,   &encoder.wx, &encoder.wh, &encoder.b,
            &glimpse_ref, &glimpse_q, &glimpse_v,  &mlp1.w,     &mlp1.b,
            &mlp2.w,      &mlp2.b};
}

std::vector<const nn::Param*> CriticModel::params() const {
    auto mut = const_cast<CriticModel*>(this)->params();
    return {mut.begin(), mut.end()};
}

namespace {

Vec point_vec(const Point& p) { return {p.x, p.y}; }

void check_coords(const std::vector<Point>& coords) {
    if (coords.empty()) throw Error("encode: empty coordinate list");
    for (const Point& p : coords)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw Error("encode: non-finite coordinate");
}

EncodeCache run_encoder(const nn::Linear& embed, const nn::Lstm& lstm,
                        const std::vector<Point>& coords) {
    check_coords(coords);
    const std::size_t n = coords.size();
    EncodeCache enc;
    enc.embeds.resize(n);
    enc.steps.resize(n);
    enc.states.resize(n);
    nn::LstmState state = lstm.zero_state();
    for (std::size_t i = 0; i < n; ++i) {
        enc.embeds[i] = embed.forward(point_vec(coords[i]));
        state = lstm.step(enc.embeds[i], state, &enc.steps[i]);
        enc.states[i] = state.h;
    }
    enc.final_state = std::move(state);
    return enc;
}

// Back-propagates per-state gradients plus a final-state gradient through the
// encoder recurrence and the embedding layer.
void run_encoder_backward(nn::Linear& embed, nn::Lstm& lstm,
                          const std::vector<Point>& coords, const EncodeCache& enc,
                          std::vector<Vec>& dstates, std::vector<Vec>& dembeds,
                          const Vec& dh_final, const Vec& dc_final) {
    const std::size_t n = coords.size();
    const int H = lstm.hidden;
    Vec dh_rec = dh_final, dc_rec = dc_final;
    for (std::size_t t = n; t-- > 0;) {
        Vec dh = dstates[t];
        for (int j = 0; j < H; ++j) dh[std::size_t(j)] += dh_rec[std::size_t(j)];
        Vec dx(dembeds[t].size(), 0.0);
        Vec dhprev(static_cast<std::size_t>(H), 0.0), dcprev(static_cast<std::size_t>(H), 0.0);
        lstm.backward(enc.steps[t], dh, dc_rec, dx, dhprev, dcprev);
        for (std::size_t j = 0; j < dx.size(); ++j) dembeds[t][j] += dx[j];
        dh_rec = std::move(dhprev);
        dc_rec = std::move(dcprev);
    }
    for (std::size_t i = 0; i < n; ++i)
        embed.backward(point_vec(coords[i]), dembeds[i], nullptr);
}

}  // namespace

EncodeCache encode(const PtrNetModel& model, const std::vector<Point>& coords) {
    return run_encoder(model.embed, model.encoder, coords);
}

DecodeResult decode(const PtrNetModel& model, const EncodeCache& enc,
                    DecodeMode mode, RngStream& rng, DecodeCache* cache) {
    const std::size_t n = enc.states.size();
    const int H = model.hidden_dim;

    std::vector<Vec> ref_proj(n, Vec(static_cast<std::size_t>(H), 0.0));
    for (std::size_t i = 0; i < n; ++i)
        nn::matvec_add(model.attn_ref.value, enc.states[i], ref_proj[i]);

    DecodeResult result;
    result.mode = mode;
    result.permutation.reserve(n);
    std::vector<char> mask(n, 0);
    nn::LstmState state = enc.final_state;
    if (cache) {
        cache->dec_steps.resize(n);
        cache->attn.resize(n);
    }

    int prev_chosen = -1;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec& x = (t == 0) ? model.start_token.value.a
                                : enc.embeds[std::size_t(prev_chosen)];
        nn::LstmCache local_step;
        nn::LstmCache* step_cache = cache ? &cache->dec_steps[t] : &local_step;
        state = model.decoder.step(x, state, step_cache);
        const Vec& q = state.h;

        Vec wq_q(static_cast<std::size_t>(H), 0.0);
        nn::matvec_add(model.attn_q.value, q, wq_q);

        Vec logits(n, 0.0);
        std::vector<Vec> tanh_t;
        if (cache) tanh_t.assign(n, Vec());
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) continue;
            Vec ti(static_cast<std::size_t>(H));
            double u = 0.0;
            for (int j = 0; j < H; ++j) {
                const std::size_t sj = std::size_t(j);
                ti[sj] = std::tanh(ref_proj[i][sj] + wq_q[sj]);
                u += model.attn_v.value.a[sj] * ti[sj];
            }
            logits[i] = u;
            if (cache) tanh_t[i] = std::move(ti);
        }
        Vec probs = nn::softmax_masked(logits, mask);

        int chosen;
        if (mode == DecodeMode::Greedy) {
            chosen = -1;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (!mask[i] && probs[i] > best) {
                    best = probs[i];
                    chosen = int(i);
                }
        } else {
            const double r = rng.next_double();
            double acc = 0.0;
            chosen = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask[i]) continue;
                acc += probs[i];
                chosen = int(i);
                if (r < acc) break;
            }
        }

        result.log_prob += std::log(probs[std::size_t(chosen)]);
        result.permutation.push_back(chosen);
        if (cache) {
            AttnStepCache& a = cache->attn[t];
            a.query = q;
            a.tanh_t = std::move(tanh_t);
            a.probs = std::move(probs);
            a.mask = mask;
            a.chosen = chosen;
        }
        mask[std::size_t(chosen)] = 1;
        prev_chosen = chosen;
    }
    if (cache) cache->ref_proj = std::move(ref_proj);
    return result;
}

void actor_backward(PtrNetModel& model, const std::vector<Point>& coords,
                    const EncodeCache& enc, const DecodeCache& dec,
                    const DecodeResult& result, double coef) {
    const std::size_t n = coords.size();
    const int H = model.hidden_dim;
    const int E = model.embed_dim;

    std::vector<Vec> dstates(n, Vec(static_cast<std::size_t>(H), 0.0));
    std::vector<Vec> dref(n, Vec(static_cast<std::size_t>(H), 0.0));
    std::vector<Vec> dembeds(n, Vec(static_cast<std::size_t>(E), 0.0));
    Vec dh(static_cast<std::size_t>(H), 0.0), dc(static_cast<std::size_t>(H), 0.0);

    for (std::size_t t = n; t-- > 0;) {
        const AttnStepCache& a = dec.attn[t];
        Vec dwq_q(static_cast<std::size_t>(H), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (a.mask[i]) continue;
            // d(coef * log p(chosen)) / du_i
            const double du = coef * ((int(i) == a.chosen ? 1.0 : 0.0) - a.probs[i]);
            if (du == 0.0) continue;
            const Vec& ti = a.tanh_t[i];
            for (int j = 0; j < H; ++j) {
                const std::size_t sj = std::size_t(j);
                const double dt = du * model.attn_v.value.a[sj] * (1.0 - ti[sj] * ti[sj]);
                dref[i][sj] += dt;
                dwq_q[sj] += dt;
                model.attn_v.grad.a[sj] += du * ti[sj];
            }
        }
        nn::outer_add(model.attn_q.grad, dwq_q, a.query);
        nn::matvec_t_add(model.attn_q.value, dwq_q, dh);

        Vec dx(static_cast<std::size_t>(E), 0.0);
        Vec dhprev(static_cast<std::size_t>(H), 0.0), dcprev(static_cast<std::size_t>(H), 0.0);
        model.decoder.backward(dec.dec_steps[t], dh, dc, dx, dhprev, dcprev);
        if (t == 0) {
            for (int j = 0; j < E; ++j)
                model.start_token.grad.a[std::size_t(j)] += dx[std::size_t(j)];
        } else {
            Vec& de = dembeds[std::size_t(result.permutation[t - 1])];
            for (int j = 0; j < E; ++j) de[std::size_t(j)] += dx[std::size_t(j)];
        }
        dh = std::move(dhprev);
        dc = std::move(dcprev);
    }

    // ref_proj[i] = Wref * enc_state_i, shared across decode steps
    for (std::size_t i = 0; i < n; ++i) {
        nn::outer_add(model.attn_ref.grad, dref[i], enc.states[i]);
        nn::matvec_t_add(model.attn_ref.value, dref[i], dstates[i]);
    }

    // decoder initial state was the encoder final state
    run_encoder_backward(model.embed, model.encoder, coords, enc, dstates, dembeds,
                         dh, dc);
}

double critic_forward(const CriticModel& model, const std::vector<Point>& coords,
                      CriticCache* cache) {
    const int H = model.hidden_dim;
    EncodeCache enc = run_encoder(model.embed, model.encoder, coords);
    const std::size_t n = coords.size();

    std::vector<Vec> ref_proj(n, Vec(static_cast<std::size_t>(H), 0.0));
    for (std::size_t i = 0; i < n; ++i)
        nn::matvec_add(model.glimpse_ref.value, enc.states[i], ref_proj[i]);

    std::vector<Vec> queries;
    queries.push_back(enc.final_state.h);
    std::vector<std::vector<Vec>> all_tanh;
    std::vector<Vec> all_probs;
    for (int p = 0; p < model.process_rounds; ++p) {
        const Vec& q = queries.back();
        Vec wq_q(static_cast<std::size_t>(H), 0.0);
        nn::matvec_add(model.glimpse_q.value, q, wq_q);
        Vec logits(n, 0.0);
        std::vector<Vec> tanh_t(n, Vec(static_cast<std::size_t>(H)));
        for (std::size_t i = 0; i < n; ++i) {
            double u = 0.0;
            for (int j = 0; j < H; ++j) {
                const std::size_t sj = std::size_t(j);
                tanh_t[i][sj] = std::tanh(ref_proj[i][sj] + wq_q[sj]);
                u += model.glimpse_v.value.a[sj] * tanh_t[i][sj];
            }
            logits[i] = u;
        }
        Vec probs = nn::softmax(logits);
        Vec next_q(static_cast<std::size_t>(H), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < H; ++j)
                next_q[std::size_t(j)] += probs[i] * enc.states[i][std::size_t(j)];
        queries.push_back(std::move(next_q));
        all_tanh.push_back(std::move(tanh_t));
        all_probs.push_back(std::move(probs));
    }

    Vec pre = model.mlp1.forward(queries.back());
    Vec hidden(pre.size());
    for (std::size_t j = 0; j < pre.size(); ++j) hidden[j] = std::max(0.0, pre[j]);
    const double out = model.mlp2.forward(hidden)[0];
    if (!std::isfinite(out)) throw Error("critic produced non-finite output");

    if (cache) {
        cache->enc = std::move(enc);
        cache->ref_proj = std::move(ref_proj);
        cache->queries = std::move(queries);
        cache->tanh_t = std::move(all_tanh);
        cache->attn_probs = std::move(all_probs);
        cache->mlp_hidden = std::move(hidden);
    }
    return out;
}

void critic_backward(CriticModel& model, const std::vector<Point>& coords,
                     const CriticCache& cache, double dout) {
    const int H = model.hidden_dim;
    const std::size_t n = coords.size();

    Vec dhid(static_cast<std::size_t>(H), 0.0);
    Vec dy{dout};
    model.mlp2.backward(cache.mlp_hidden, dy, &dhid);
    for (int j = 0; j < H; ++j)
        if (cache.mlp_hidden[std::size_t(j)] <= 0.0) dhid[std::size_t(j)] = 0.0;
    Vec dq(static_cast<std::size_t>(H), 0.0);
    model.mlp1.backward(cache.queries.back(), dhid, &dq);

    std::vector<Vec> dstates(n, Vec(static_cast<std::size_t>(H), 0.0));
    std::vector<Vec> dref(n, Vec(static_cast<std::size_t>(H), 0.0));

    for (int p = model.process_rounds; p-- > 0;) {
        const Vec& probs = cache.attn_probs[std::size_t(p)];
        const auto& tanh_t = cache.tanh_t[std::size_t(p)];
        const Vec& q_prev = cache.queries[std::size_t(p)];

        // q_{p+1} = sum_i a_i e_i
        Vec da(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < H; ++j) {
                const std::size_t sj = std::size_t(j);
                acc += cache.enc.states[i][sj] * dq[sj];
                dstates[i][sj] += probs[i] * dq[sj];
            }
            da[i] = acc;
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += probs[i] * da[i];

        Vec dwq_q(static_cast<std::size_t>(H), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double du = probs[i] * (da[i] - dot);
            if (du == 0.0) continue;
            for (int j = 0; j < H; ++j) {
                const std::size_t sj = std::size_t(j);
                const double t = tanh_t[i][sj];
                const double dt = du * model.glimpse_v.value.a[sj] * (1.0 - t * t);
                dref[i][sj] += dt;
                dwq_q[sj] += dt;
                model.glimpse_v.grad.a[sj] += du * t;
            }
        }
        nn::outer_add(model.glimpse_q.grad, dwq_q, q_prev);
        Vec dq_prev(static_cast<std::size_t>(H), 0.0);
        nn::matvec_t_add(model.glimpse_q.value, dwq_q, dq_prev);
        dq = std::move(dq_prev);
    }

    for (std::size_t i = 0; i < n; ++i) {
        nn::outer_add(model.glimpse_ref.grad, dref[i], cache.enc.states[i]);
        nn::matvec_t_add(model.glimpse_ref.value, dref[i], dstates[i]);
    }

    // q_0 was the encoder final hidden state
    std::vector<Vec> dembeds(n, Vec(static_cast<std::size_t>(model.embed_dim), 0.0));
    Vec dc_final(static_cast<std::size_t>(H), 0.0);
    run_encoder_backward(model.embed, model.encoder, coords, cache.enc, dstates,
                         dembeds, dq, dc_final);
}

std::vector<int> ptrnet_solve(const PtrNetModel& model,
                              const std::vector<Point>& coords, RngStream& rng,
                              int samples) {
    EncodeCache enc = encode(model, coords);
    DecodeResult best = decode(model, enc, DecodeMode::Greedy, rng);
    double best_len = tour_length(coords, best.permutation);
    for (int s = 1; s < samples; ++s) {
        DecodeResult cand = decode(model, enc, DecodeMode::Sample, rng);
        const double len = tour_length(coords, cand.permutation);
        if (len < best_len) {
            best_len = len;
            best = std::move(cand);
        }
    }
    return best.permutation;
}

}  // namespace cctsp

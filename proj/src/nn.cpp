#include "cctsp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cctsp::nn {

double lr_at(const AdamConfig& cfg, long step) {
    return cfg.lr0 * std::pow(cfg.decay_factor, double(step / cfg.decay_every));
}

void Adam::step(std::span<Param* const> params) {
    const double lr = lr_at(cfg_, step_);
    const long t = step_ + 1;  // bias-correction counter
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t));
    for (Param* p : params) {
        for (std::size_t i = 0; i < p->count(); ++i) {
            const double g = p->grad.a[i];
            if (!std::isfinite(g))
                throw Error("non-finite gradient in parameter '" + p->name + "'");
            double& m = p->adam_m.a[i];
            double& v = p->adam_v.a[i];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p->value.a[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            if (!std::isfinite(p->value.a[i]))
                throw Error("non-finite value in parameter '" + p->name +
                            "' after update");
        }
        p->zero_grad();
    }
    ++step_;
}

double global_grad_norm(std::span<Param* const> params) {
    double sq = 0.0;
    for (const Param* p : params)
        for (double g : p->grad.a) sq += g * g;
    return std::sqrt(sq);
}

void clip_global_norm(std::span<Param* const> params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Param* p : params)
        for (double& g : p->grad.a) g *= scale;
}

Vec softmax_masked(const Vec& logits, const std::vector<char>& mask) {
    const std::size_t n = logits.size();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (!mask[i]) mx = std::max(mx, logits[i]);
    if (!std::isfinite(mx)) throw Error("no feasible city: all entries masked");
    Vec p(n, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) continue;
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!mask[i]) p[i] /= sum;
    return p;
}

Vec softmax(const Vec& logits) {
    return softmax_masked(logits, std::vector<char>(logits.size(), 0));
}

void matvec_add(const Tensor& w, const Vec& x, Vec& y) {
    const int rows = w.rows, cols = w.cols;
    const double* wa = w.a.data();
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = wa + std::size_t(r) * std::size_t(cols);
        for (int c = 0; c < cols; ++c) acc += row[c] * x[std::size_t(c)];
        y[std::size_t(r)] += acc;
    }
}

void matvec_t_add(const Tensor& w, const Vec& dy, Vec& dx) {
    const int rows = w.rows, cols = w.cols;
    const double* wa = w.a.data();
    for (int r = 0; r < rows; ++r) {
        const double d = dy[std::size_t(r)];
        if (d == 0.0) continue;
        const double* row = wa + std::size_t(r) * std::size_t(cols);
        for (int c = 0; c < cols; ++c) dx[std::size_t(c)] += row[c] * d;
    }
}

void outer_add(Tensor& dw, const Vec& dy, const Vec& x) {
    const int rows = dw.rows, cols = dw.cols;
    double* wa = dw.a.data();
    for (int r = 0; r < rows; ++r) {
        const double d = dy[std::size_t(r)];
        if (d == 0.0) continue;
        double* row = wa + std::size_t(r) * std::size_t(cols);
        for (int c = 0; c < cols; ++c) row[c] += d * x[std::size_t(c)];
    }
}

Vec Linear::forward(const Vec& x) const {
    if (int(x.size()) != in)
        throw Error("linear '" + w.name + "': input size " + std::to_string(x.size()) +
                    ", expected " + std::to_string(in));
    Vec y(b.value.a);
    matvec_add(w.value, x, y);
    return y;
}

void Linear::backward(const Vec& x, const Vec& dy, Vec* dx) {
    outer_add(w.grad, dy, x);
    for (int r = 0; r < out; ++r) b.grad.a[std::size_t(r)] += dy[std::size_t(r)];
    if (dx) matvec_t_add(w.value, dy, *dx);
}

namespace {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}

LstmState Lstm::step(const Vec& x, const LstmState& prev, LstmCache* cache) const {
    const int H = hidden;
    if (int(x.size()) != in || int(prev.h.size()) != H)
        throw Error("lstm '" + wx.name + "': shape mismatch, input " +
                    std::to_string(x.size()) + " state " + std::to_string(prev.h.size()));
    Vec pre(b.value.a);  // 4H
    matvec_add(wx.value, x, pre);
    matvec_add(wh.value, prev.h, pre);

    Vec gi(static_cast<std::size_t>(H)), gf(static_cast<std::size_t>(H)), gg(static_cast<std::size_t>(H)), go(static_cast<std::size_t>(H));
    LstmState out;
    out.h.resize(static_cast<std::size_t>(H));
    out.c.resize(static_cast<std::size_t>(H));
    Vec tanhc(static_cast<std::size_t>(H));
    for (int j = 0; j < H; ++j) {
        const std::size_t sj = std::size_t(j);
        gi[sj] = sigmoid(pre[sj]);
        gf[sj] = sigmoid(pre[std::size_t(H) + sj]);
        gg[sj] = std::tanh(pre[2 * std::size_t(H) + sj]);
        go[sj] = sigmoid(pre[3 * std::size_t(H) + sj]);
        out.c[sj] = gf[sj] * prev.c[sj] + gi[sj] * gg[sj];
        tanhc[sj] = std::tanh(out.c[sj]);
        out.h[sj] = go[sj] * tanhc[sj];
    }
    if (cache) {
        cache->x = x;
        cache->hprev = prev.h;
        cache->cprev = prev.c;
        cache->gi = std::move(gi);
        cache->gf = std::move(gf);
        cache->gg = std::move(gg);
        cache->go = std::move(go);
        cache->c = out.c;
        cache->tanhc = std::move(tanhc);
    }
    return out;
}

void Lstm::backward(const LstmCache& cache, const Vec& dh, const Vec& dc,
                    Vec& dx, Vec& dhprev, Vec& dcprev) {
    const int H = hidden;
    Vec dpre(static_cast<std::size_t>(4 * H));
    for (int j = 0; j < H; ++j) {
        const std::size_t sj = std::size_t(j);
        const double dgo = dh[sj] * cache.tanhc[sj];
        double dcj = dc[sj] + dh[sj] * cache.go[sj] * (1.0 - cache.tanhc[sj] * cache.tanhc[sj]);
        const double dgi = dcj * cache.gg[sj];
        const double dgf = dcj * cache.cprev[sj];
        const double dgg = dcj * cache.gi[sj];
        dcprev[sj] += dcj * cache.gf[sj];
        dpre[sj] = dgi * cache.gi[sj] * (1.0 - cache.gi[sj]);
        dpre[std::size_t(H) + sj] = dgf * cache.gf[sj] * (1.0 - cache.gf[sj]);
        dpre[2 * std::size_t(H) + sj] = dgg * (1.0 - cache.gg[sj] * cache.gg[sj]);
        dpre[3 * std::size_t(H) + sj] = dgo * cache.go[sj] * (1.0 - cache.go[sj]);
    }
    outer_add(wx.grad, dpre, cache.x);
    outer_add(wh.grad, dpre, cache.hprev);
    for (int r = 0; r < 4 * H; ++r) b.grad.a[std::size_t(r)] += dpre[std::size_t(r)];
    matvec_t_add(wx.value, dpre, dx);
    matvec_t_add(wh.value, dpre, dhprev);
}

void init_uniform(Param& p, int fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    for (double& v : p.value.a) v = rng.next_uniform(-bound, bound);
}

Linear make_linear(int in, int out, RngStream& rng, const std::string& name) {
    Linear l;
    l.in = in;
    l.out = out;
    l.w = Param(name + ".w", out, in);
    l.b = Param(name + ".b", out, 1);
    init_uniform(l.w, in, rng);
    return l;
}

Lstm make_lstm(int in, int hidden, RngStream& rng, const std::string& name) {
    Lstm l;
    l.in = in;
    l.hidden = hidden;
    l.wx = Param(name + ".wx", 4 * hidden, in);
    l.wh = Param(name + ".wh", 4 * hidden, hidden);
    l.b = Param(name + ".b", 4 * hidden, 1);
    init_uniform(l.wx, in, rng);
    init_uniform(l.wh, hidden, rng);
    for (int j = 0; j < hidden; ++j) l.b.value.a[std::size_t(hidden + j)] = 1.0;
    return l;
}

void check_finite(const Param& p) {
    for (double v : p.value.a)
        if (!std::isfinite(v))
            throw Error("non-finite value in parameter '" + p.name + "'");
}

}  // namespace cctsp::nn

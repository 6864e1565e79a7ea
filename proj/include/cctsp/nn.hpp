#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cctsp/rng.hpp"
#include "cctsp/tsp.hpp"

namespace cctsp::nn {

using Vec = std::vector<double>;

// Dense row-major array. rows x cols; a vector is rows x 1.
struct Tensor {
    int rows = 0, cols = 1;
    std::vector<double> a;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}

    double& at(int r, int c) { return a[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    double at(int r, int c) const { return a[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    std::size_t count() const { return a.size(); }
};

// Parameter block: values, gradient accumulator and Adam moments, all of the
// same shape.
struct Param {
    std::string name;
    Tensor value, grad, adam_m, adam_v;

    Param() = default;
    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols),
          adam_m(rows, cols), adam_v(rows, cols) {}

    void zero_grad() { std::fill(grad.a.begin(), grad.a.end(), 0.0); }
    std::size_t count() const { return value.count(); }
};

struct AdamConfig {
    double lr0 = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long decay_every = 5000;
    double decay_factor = 0.96;
};

// lr at step t = lr0 * decay_factor^floor(t / decay_every), t counted from 0.
double lr_at(const AdamConfig& cfg, long step);

// Adam with bias correction and step-decay learning rate. step() applies one
// update to every param and zeroes its gradient. Non-finite gradients or
// values raise Error naming the parameter.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
    void step(std::span<Param* const> params);
    long steps_done() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long step_ = 0;
};

double global_grad_norm(std::span<Param* const> params);
void clip_global_norm(std::span<Param* const> params, double max_norm);

// Masked softmax with max subtraction; mask[i] != 0 excludes entry i (its
// probability is exactly 0). Throws Error if everything is masked.
Vec softmax_masked(const Vec& logits, const std::vector<char>& mask);
Vec softmax(const Vec& logits);

// y = W x + b, W is out x in.
struct Linear {
    Param w, b;
    int in = 0, out = 0;

    Vec forward(const Vec& x) const;
    // Accumulates into w.grad/b.grad; adds W^T dy into *dx when given.
    void backward(const Vec& x, const Vec& dy, Vec* dx);
};

struct LstmState {
    Vec h, c;
};

// Forward intermediates needed by the backward pass for one step.
struct LstmCache {
    Vec x, hprev, cprev;
    Vec gi, gf, gg, go;  // post-activation gates
    Vec c, tanhc;
};

// Standard LSTM cell. Gate layout in wx/wh/b is [input; forget; cell; output]
// blocks of H rows each.
struct Lstm {
    Param wx;  // 4H x in
    Param wh;  // 4H x H
    Param b;   // 4H
    int in = 0, hidden = 0;

    LstmState step(const Vec& x, const LstmState& prev, LstmCache* cache = nullptr) const;
    LstmState zero_state() const { return {Vec(std::size_t(hidden), 0.0), Vec(std::size_t(hidden), 0.0)}; }
    // Accumulates param grads; adds into dx/dhprev/dcprev.
    void backward(const LstmCache& cache, const Vec& dh, const Vec& dc,
                  Vec& dx, Vec& dhprev, Vec& dcprev);
};

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform(Param& p, int fan_in, RngStream& rng);
Linear make_linear(int in, int out, RngStream& rng, const std::string& name);
// Forget-gate bias starts at 1.0.
Lstm make_lstm(int in, int hidden, RngStream& rng, const std::string& name);

// y += W x ; dW += dy x^T ; dx += W^T dy  (all shapes from W: out x in)
void matvec_add(const Tensor& w, const Vec& x, Vec& y);
void matvec_t_add(const Tensor& w, const Vec& dy, Vec& dx);
void outer_add(Tensor& dw, const Vec& dy, const Vec& x);

void check_finite(const Param& p);

}  // namespace cctsp::nn

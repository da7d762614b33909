#include "rae/nn.hpp"

#include <cmath>
#include <string>

namespace rae {

Vec sigmoid(const Vec& v) {
    return 1.0 / (1.0 + (-v.array()).exp());
}

Vec tanh_vec(const Vec& v) {
    return v.array().tanh();
}

Vec apply_activation(const Vec& v, Activation act) {
    switch (act) {
        case Activation::Identity: return v;
        case Activation::Sigmoid: return sigmoid(v);
        case Activation::Tanh: return tanh_vec(v);
    }
    throw std::invalid_argument("unknown activation");
}

Vec activation_grad_from_output(const Vec& a, Activation act) {
    switch (act) {
        case Activation::Identity: return Vec::Ones(a.size());
        case Activation::Sigmoid: return a.array() * (1.0 - a.array());
        case Activation::Tanh: return 1.0 - a.array().square();
    }
    throw std::invalid_argument("unknown activation");
}

Vec affine(const DenseLayer& layer, const Vec& x) {
    require(layer.b.size() == layer.W.rows(),
            "affine: bias length " + std::to_string(layer.b.size()) +
                " != weight rows " + std::to_string(layer.W.rows()));
    require(x.size() == layer.W.cols(),
            "affine: input length " + std::to_string(x.size()) +
                " != weight cols " + std::to_string(layer.W.cols()));
    return apply_activation(layer.W * x + layer.b, layer.act);
}

MseResult mse_loss(const Vec& y, const Vec& x) {
    require(y.size() == x.size(), "mse_loss: length mismatch " + std::to_string(y.size()) +
                                      " vs " + std::to_string(x.size()));
    require(y.size() > 0, "mse_loss: empty vectors");
    const Vec diff = y - x;
    const Scalar n = static_cast<Scalar>(y.size());
    return MseResult{diff.squaredNorm() / n, (2.0 / n) * diff};
}

OptimizerState make_optimizer_state(Index n_params, Scalar alpha) {
    OptimizerState s;
    s.m = Vec::Zero(n_params);
    s.v = Vec::Zero(n_params);
    s.alpha = alpha;
    return s;
}

Vec optimizer_step(const Vec& params, const Vec& grads, OptimizerState& state) {
    require(params.size() == grads.size(), "optimizer_step: params/grads shape mismatch");
    require(params.size() == state.m.size() && params.size() == state.v.size(),
            "optimizer_step: accumulator shape mismatch");
    state.t += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.array().square().matrix();
    const Scalar corr1 = 1.0 - std::pow(state.beta1, static_cast<Scalar>(state.t));
    const Scalar corr2 = 1.0 - std::pow(state.beta2, static_cast<Scalar>(state.t));
    const Vec m_hat = state.m / corr1;
    const Vec v_hat = state.v / corr2;
    return params.array() - state.alpha * m_hat.array() / (v_hat.array().sqrt() + state.eps);
}

Scalar grad_check(const std::function<Scalar(const Vec&)>& f, const Vec& params,
                  const Vec& analytic_grads, Scalar step) {
    require(step > 0, "grad_check: step must be positive");
    require(params.size() == analytic_grads.size(), "grad_check: gradient shape mismatch");
    Vec p = params;
    Scalar worst = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        const Scalar saved = p(i);
        p(i) = saved + step;
        const Scalar up = f(p);
        p(i) = saved - step;
        const Scalar down = f(p);
        p(i) = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::runtime_error("grad_check: non-finite objective at coordinate " +
                                     std::to_string(i));
        const Scalar fd = (up - down) / (2.0 * step);
        const Scalar denom = std::max(1e-8, std::abs(fd) + std::abs(analytic_grads(i)));
        worst = std::max(worst, std::abs(fd - analytic_grads(i)) / denom);
    }
    return worst;
}

void init_glorot(Mat& W, Index fan_in, Index fan_out, SeededRng& rng) {
    const Scalar bound = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
    for (Index r = 0; r < W.rows(); ++r)
        for (Index c = 0; c < W.cols(); ++c)
            W(r, c) = rng.uniform(-bound, bound);
}

DenseLayer make_dense(Index in, Index out, Activation act, SeededRng& rng) {
    require(in > 0 && out > 0, "make_dense: widths must be positive");
    DenseLayer layer;
    layer.W = Mat(out, in);
    init_glorot(layer.W, in, out, rng);
    layer.b = Vec::Zero(out);
    layer.act = act;
    return layer;
}

} // namespace rae

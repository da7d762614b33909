#pragma once

#include "rae/types.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace rae {

enum class Activation { Identity, Sigmoid, Tanh };

Vec sigmoid(const Vec& v);
Vec tanh_vec(const Vec& v);
Vec apply_activation(const Vec& v, Activation act);

// Derivative expressed through the activation's own output, which is all
// the backward passes cache: sigmoid' = a(1-a), tanh' = 1-a^2, identity' = 1.
Vec activation_grad_from_output(const Vec& a, Activation act);

/// Fully connected layer. Bias length must equal the weight row count.
struct DenseLayer {
    Mat W;
    Vec b;
    Activation act = Activation::Identity;

    Index in_width() const { return W.cols(); }
    Index out_width() const { return W.rows(); }
};

/// activation(W x + b). Rejects mismatched dimensions.
Vec affine(const DenseLayer& layer, const Vec& x);

struct MseResult {
    Scalar loss;
    Vec grad; // d loss / d y
};

/// Mean squared error between y and x with its gradient w.r.t. y.
MseResult mse_loss(const Vec& y, const Vec& x);

// Adaptive-moment optimizer over a flat parameter vector.
struct OptimizerState {
    Vec m;   // first moment
    Vec v;   // second moment
    long t = 0;
    Scalar alpha = 1e-3;
    Scalar beta1 = 0.9;
    Scalar beta2 = 0.999;
    Scalar eps = 1e-8;
};

OptimizerState make_optimizer_state(Index n_params, Scalar alpha = 1e-3);

/// One bias-corrected update. Returns the new parameters; `state` is advanced.
Vec optimizer_step(const Vec& params, const Vec& grads, OptimizerState& state);

/// Max over coordinates of |fd - analytic| / max(1e-8, |fd| + |analytic|),
/// where fd is the central finite difference of f at params.
Scalar grad_check(const std::function<Scalar(const Vec&)>& f, const Vec& params,
                  const Vec& analytic_grads, Scalar step);

// Deterministic PRNG wrapper. The uniform draw is built from raw engine
// output so that streams are identical across standard-library versions.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1).
    Scalar uniform01() {
        return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw in [lo, hi).
    Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Fills a matrix with uniform values in +-sqrt(6 / (fan_in + fan_out)).
void init_glorot(Mat& W, Index fan_in, Index fan_out, SeededRng& rng);

DenseLayer make_dense(Index in, Index out, Activation act, SeededRng& rng);

} // namespace rae

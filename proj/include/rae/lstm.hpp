#pragma once

#include "rae/nn.hpp"
#include "rae/types.hpp"

namespace rae {

// Weights of one memory cell. Each gate sees the input x (width d_z) and
// the previous hidden state m (width d_m); there are no peephole paths.
struct LstmParams {
    Mat W_i, U_i;
    Vec b_i;
    Mat W_o, U_o;
    Vec b_o;
    Mat W_f, U_f;
    Vec b_f;
    Mat W_c, U_c;
    Vec b_c;

    Index hidden_width() const { return b_i.size(); }
    Index input_width() const { return W_i.cols(); }
};

/// Cell state c and hidden state m, both of width d_m.
struct LstmState {
    Vec c;
    Vec m;
};

LstmState zero_lstm_state(Index d_m);

// Forward bookkeeping for one step, kept only while training.
struct LstmCache {
    Vec x;
    Vec c_prev, m_prev;
    Vec i, o, f, g; // gate activations and tanh candidate
    Vec c_new;
    Vec tanh_c_new;
};

struct LstmStepResult {
    LstmState state;
    LstmCache cache;
};

/// One cell update:
///   i,o,f = sigmoid(W x + U m + b) per gate
///   c' = f.c + i.tanh(W_c x + U_c m + b_c)
///   m' = o.tanh(c')
/// Pure; the caller's state is left untouched.
LstmStepResult lstm_step(const LstmParams& params, const Vec& x, const LstmState& s);

struct LstmGrads {
    LstmParams dparams;
    Vec dx;
    LstmState dstate; // gradients w.r.t. the incoming (c, m)
};

/// Exact gradients of one forward step. `dc_next` and `dm_next` are the
/// upstream gradients on the step outputs (c', m').
LstmGrads lstm_step_backward(const LstmParams& params, const LstmCache& cache,
                             const Vec& dc_next, const Vec& dm_next);

LstmParams zero_lstm_params(Index d_z, Index d_m);

/// Seeded initialization; forget-gate bias starts at +1, all other biases at 0.
LstmParams init_lstm_params(Index d_z, Index d_m, SeededRng& rng);

/// Accumulates `delta` into `acc` entrywise (shapes must already agree).
void accumulate(LstmParams& acc, const LstmParams& delta);

} // namespace rae

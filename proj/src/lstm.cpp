#include "rae/lstm.hpp"

#include <string>

namespace rae {

LstmState zero_lstm_state(Index d_m) {
    return LstmState{Vec::Zero(d_m), Vec::Zero(d_m)};
}

namespace {

void check_shapes(const LstmParams& p) {
    const Index d_m = p.hidden_width();
    const Index d_z = p.input_width();
    auto ok_gate = [&](const Mat& W, const Mat& U, const Vec& b) {
        return W.rows() == d_m && W.cols() == d_z && U.rows() == d_m && U.cols() == d_m &&
               b.size() == d_m;
    };
    require(ok_gate(p.W_i, p.U_i, p.b_i) && ok_gate(p.W_o, p.U_o, p.b_o) &&
                ok_gate(p.W_f, p.U_f, p.b_f) && ok_gate(p.W_c, p.U_c, p.b_c),
            "lstm: inconsistent parameter shapes");
}

} // namespace

LstmStepResult lstm_step(const LstmParams& params, const Vec& x, const LstmState& s) {
    check_shapes(params);
    const Index d_m = params.hidden_width();
    require(x.size() == params.input_width(),
            "lstm_step: input length " + std::to_string(x.size()) + " != d_z " +
                std::to_string(params.input_width()));
    require(s.c.size() == d_m && s.m.size() == d_m, "lstm_step: state width != d_m");

    LstmCache cache;
    cache.x = x;
    cache.c_prev = s.c;
    cache.m_prev = s.m;
    cache.i = sigmoid(params.W_i * x + params.U_i * s.m + params.b_i);
    cache.o = sigmoid(params.W_o * x + params.U_o * s.m + params.b_o);
    cache.f = sigmoid(params.W_f * x + params.U_f * s.m + params.b_f);
    cache.g = tanh_vec(params.W_c * x + params.U_c * s.m + params.b_c);
    cache.c_new = cache.f.cwiseProduct(s.c) + cache.i.cwiseProduct(cache.g);
    cache.tanh_c_new = tanh_vec(cache.c_new);

    LstmState next{cache.c_new, cache.o.cwiseProduct(cache.tanh_c_new)};
    return LstmStepResult{std::move(next), std::move(cache)};
}

LstmGrads lstm_step_backward(const LstmParams& params, const LstmCache& cache,
                             const Vec& dc_next, const Vec& dm_next) {
    check_shapes(params);
    const Index d_m = params.hidden_width();
    require(cache.i.size() == d_m && cache.x.size() == params.input_width(),
            "lstm_step_backward: cache does not match params");
    require(dc_next.size() == d_m && dm_next.size() == d_m,
            "lstm_step_backward: upstream gradient width != d_m");

    // m' = o . tanh(c'), so dm' splits into the output gate and the cell path.
    const Vec do_act = dm_next.cwiseProduct(cache.tanh_c_new);
    const Vec dc_total =
        dc_next.array() + dm_next.array() * cache.o.array() * (1.0 - cache.tanh_c_new.array().square());

    const Vec df = dc_total.cwiseProduct(cache.c_prev);
    const Vec di = dc_total.cwiseProduct(cache.g);
    const Vec dg = dc_total.cwiseProduct(cache.i);

    // Pre-activation gradients.
    const Vec da_i = di.array() * cache.i.array() * (1.0 - cache.i.array());
    const Vec da_o = do_act.array() * cache.o.array() * (1.0 - cache.o.array());
    const Vec da_f = df.array() * cache.f.array() * (1.0 - cache.f.array());
    const Vec da_g = dg.array() * (1.0 - cache.g.array().square());

    LstmGrads out;
    out.dparams.W_i = da_i * cache.x.transpose();
    out.dparams.U_i = da_i * cache.m_prev.transpose();
    out.dparams.b_i = da_i;
    out.dparams.W_o = da_o * cache.x.transpose();
    out.dparams.U_o = da_o * cache.m_prev.transpose();
    out.dparams.b_o = da_o;
    out.dparams.W_f = da_f * cache.x.transpose();
    out.dparams.U_f = da_f * cache.m_prev.transpose();
    out.dparams.b_f = da_f;
    out.dparams.W_c = da_g * cache.x.transpose();
    out.dparams.U_c = da_g * cache.m_prev.transpose();
    out.dparams.b_c = da_g;

    out.dx = params.W_i.transpose() * da_i + params.W_o.transpose() * da_o +
             params.W_f.transpose() * da_f + params.W_c.transpose() * da_g;
    out.dstate.c = dc_total.cwiseProduct(cache.f);
    out.dstate.m = params.U_i.transpose() * da_i + params.U_o.transpose() * da_o +
                   params.U_f.transpose() * da_f + params.U_c.transpose() * da_g;
    return out;
}

LstmParams zero_lstm_params(Index d_z, Index d_m) {
    require(d_z > 0 && d_m > 0, "lstm params: widths must be positive");
    LstmParams p;
    p.W_i = Mat::Zero(d_m, d_z);
    p.U_i = Mat::Zero(d_m, d_m);
    p.b_i = Vec::Zero(d_m);
    p.W_o = Mat::Zero(d_m, d_z);
    p.U_o = Mat::Zero(d_m, d_m);
    p.b_o = Vec::Zero(d_m);
    p.W_f = Mat::Zero(d_m, d_z);
    p.U_f = Mat::Zero(d_m, d_m);
    p.b_f = Vec::Zero(d_m);
    p.W_c = Mat::Zero(d_m, d_z);
    p.U_c = Mat::Zero(d_m, d_m);
    p.b_c = Vec::Zero(d_m);
    return p;
}

LstmParams init_lstm_params(Index d_z, Index d_m, SeededRng& rng) {
    LstmParams p = zero_lstm_params(d_z, d_m);
    init_glorot(p.W_i, d_z, d_m, rng);
    init_glorot(p.U_i, d_m, d_m, rng);
    init_glorot(p.W_o, d_z, d_m, rng);
    init_glorot(p.U_o, d_m, d_m, rng);
    init_glorot(p.W_f, d_z, d_m, rng);
    init_glorot(p.U_f, d_m, d_m, rng);
    init_glorot(p.W_c, d_z, d_m, rng);
    init_glorot(p.U_c, d_m, d_m, rng);
    p.b_f.setOnes(); // open forget gates early in training
    return p;
}

void accumulate(LstmParams& acc, const LstmParams& delta) {
    acc.W_i += delta.W_i;
    acc.U_i += delta.U_i;
    acc.b_i += delta.b_i;
    acc.W_o += delta.W_o;
    acc.U_o += delta.U_o;
    acc.b_o += delta.b_o;
    acc.W_f += delta.W_f;
    acc.U_f += delta.U_f;
    acc.b_f += delta.b_f;
    acc.W_c += delta.W_c;
    acc.U_c += delta.U_c;
    acc.b_c += delta.b_c;
}

} // namespace rae

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rae/model.hpp"

using namespace rae;

namespace {

const RaeDims kTiny{3, 2, 1, 2, 1};

std::vector<Vec> random_sequence(const RaeDims& dims, Index len, std::uint64_t seed,
                                 Scalar amplitude = 1.0) {
    SeededRng rng(seed);
    std::vector<Vec> xs;
    for (Index t = 0; t < len; ++t) {
        Vec x(dims.d_in);
        for (Index i = 0; i < dims.d_in; ++i) x(i) = rng.uniform(-amplitude, amplitude);
        xs.push_back(x);
    }
    return xs;
}

} // namespace

TEST_CASE("init_params is deterministic and seed-sensitive") {
    const RaeParams a = init_params(kTiny, 5);
    const RaeParams b = init_params(kTiny, 5);
    const RaeParams c = init_params(kTiny, 6);
    CHECK(flatten(a) == flatten(b));
    CHECK(flatten(a) != flatten(c));
}

TEST_CASE("init_params rejects invalid dims") {
    CHECK_THROWS_AS(init_params(RaeDims{3, 2, 3, 2, 1}, 1), std::invalid_argument); // d_h = d_in
    CHECK_THROWS_AS(init_params(RaeDims{3, 2, 4, 2, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_params(RaeDims{0, 2, 1, 2, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_params(RaeDims{4, 2, 1, 2, 3}, 1), std::invalid_argument); // 3 excl 4
}

TEST_CASE("forget gate biases start at one") {
    const RaeParams p = init_params(kTiny, 5);
    CHECK(p.f_enc.b_f.minCoeff() == doctest::Approx(1.0));
    CHECK(p.f_dec.b_f.minCoeff() == doctest::Approx(1.0));
}

TEST_CASE("zero model encodes and decodes to zero") {
    const RaeParams p = zero_params(kTiny);
    const RaeState s = zero_rae_state(kTiny);
    const auto enc = encode_step(p, s, Vec::Constant(3, 0.7));
    CHECK(enc.h.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(enc.state.enc.c.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(enc.state.enc.m.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    const auto dec = decode_step(p, s, Vec::Constant(1, 0.3));
    CHECK(dec.x_hat.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("encode and decode steps are pure and deterministic") {
    const RaeParams p = init_params(kTiny, 17);
    RaeState s = zero_rae_state(kTiny);
    s.enc.c(0) = 0.2;
    s.dec.m(1) = -0.4;
    Vec x(3);
    x << 0.1, -0.8, 0.5;

    const auto e1 = encode_step(p, s, x);
    const auto e2 = encode_step(p, s, x);
    CHECK(e1.h == e2.h);
    CHECK(e1.state.enc.c == e2.state.enc.c);
    CHECK(s.enc.c(0) == doctest::Approx(0.2)); // input untouched

    const auto d1 = decode_step(p, s, Vec::Constant(1, 0.3));
    const auto d2 = decode_step(p, s, Vec::Constant(1, 0.3));
    CHECK(d1.x_hat == d2.x_hat);
}

TEST_CASE("the recurrence carries information between encode steps") {
    const RaeParams p = init_params(kTiny, 99);
    const RaeState fresh = zero_rae_state(kTiny);
    Vec x(3);
    x << 0.4, -0.2, 0.9;
    const auto first = encode_step(p, fresh, x);
    const auto second = encode_step(p, first.state, x);
    CHECK(first.h != second.h);
}

TEST_CASE("encoder and decoder halves of the state never interact") {
    const RaeParams p = init_params(kTiny, 7);
    RaeState a = zero_rae_state(kTiny);
    RaeState b = zero_rae_state(kTiny);
    b.dec.c.setConstant(0.9); // differs only on the decoder side
    b.dec.m.setConstant(-0.5);
    Vec x(3);
    x << 0.3, 0.3, -0.1;
    const auto ea = encode_step(p, a, x);
    const auto eb = encode_step(p, b, x);
    CHECK(ea.h == eb.h);
    CHECK(ea.state.enc.c == eb.state.enc.c);
    CHECK(eb.state.dec.c == b.dec.c); // decoder half passes through

    RaeState c = zero_rae_state(kTiny);
    RaeState d = zero_rae_state(kTiny);
    d.enc.c.setConstant(0.8); // differs only on the encoder side
    d.enc.m.setConstant(0.6);
    const Vec code = Vec::Constant(1, -0.25);
    const auto dc = decode_step(p, c, code);
    const auto dd = decode_step(p, d, code);
    CHECK(dc.x_hat == dd.x_hat);
    CHECK(dc.state.dec.c == dd.state.dec.c);
    CHECK(dd.state.enc.c == d.enc.c);
}

TEST_CASE("decoder output is a function of the code sequence alone") {
    const RaeParams p = init_params(kTiny, 21);
    const auto codes = random_sequence(RaeDims{1, 1, 1, 1, 1}, 5, 3);

    auto run = [&](RaeState s) {
        std::vector<Vec> outs;
        for (const Vec& h : codes) {
            auto r = decode_step(p, s, h);
            outs.push_back(r.x_hat);
            s = r.state;
        }
        return outs;
    };
    RaeState with_enc_noise = zero_rae_state(kTiny);
    with_enc_noise.enc.c.setConstant(0.77);
    const auto a = run(zero_rae_state(kTiny));
    const auto b = run(with_enc_noise);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == b[t]);
}

TEST_CASE("forward_sequence base case matches a single encode plus decode") {
    const RaeParams p = init_params(kTiny, 4);
    Vec x(3);
    x << -0.6, 0.2, 0.8;
    const auto fwd = forward_sequence(p, {x});
    REQUIRE(fwd.x_hats.size() == 1);
    REQUIRE(fwd.codes.size() == 1);

    const auto enc = encode_step(p, zero_rae_state(kTiny), x);
    const auto dec = decode_step(p, enc.state, enc.h);
    CHECK(fwd.codes[0] == enc.h);
    CHECK(fwd.x_hats[0] == dec.x_hat);
}

TEST_CASE("forward_sequence shape and validation") {
    const RaeParams p = init_params(kTiny, 4);
    const auto xs = random_sequence(kTiny, 6, 8);
    const auto fwd = forward_sequence(p, xs);
    CHECK(fwd.x_hats.size() == xs.size());
    CHECK(fwd.caches.size() == xs.size());
    for (const Vec& h : fwd.codes) CHECK(h.size() == 1);
    CHECK_THROWS_AS(forward_sequence(p, {}), std::invalid_argument);
}

TEST_CASE("perfect reconstruction gives zero gradients") {
    const RaeParams p = init_params(kTiny, 12);
    const auto xs = random_sequence(kTiny, 3, 5);
    const auto fwd = forward_sequence(p, xs);
    // Pretend the targets were exactly the model outputs.
    const RaeGrads grads = backward_sequence(p, fwd.caches, fwd.x_hats, fwd.x_hats);
    CHECK(flatten(grads).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("code-path gradients are nonzero when the loss is nonzero") {
    const RaeParams p = init_params(kTiny, 13);
    const auto xs = random_sequence(kTiny, 3, 6);
    const auto fwd = forward_sequence(p, xs);
    const RaeGrads grads = backward_sequence(p, fwd.caches, xs, fwd.x_hats);
    CHECK(grads.g_enc.l1.W.cwiseAbs().maxCoeff() > 0.0);
    CHECK(grads.g_enc.l2.W.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sequence gradients match finite differences on a tiny model") {
    // Small-amplitude windows keep the objective small enough that the
    // finite-difference noise floor stays well below the 1e-4 threshold.
    const auto xs = random_sequence(kTiny, 3, 44, 0.1);
    const RaeParams p = init_params(kTiny, 45);
    const auto fwd = forward_sequence(p, xs);
    const RaeGrads grads = backward_sequence(p, fwd.caches, xs, fwd.x_hats);

    auto objective = [&](const Vec& flat) {
        const RaeParams q = unflatten(kTiny, flat);
        const auto f = forward_sequence(q, xs);
        return sequence_loss(f.x_hats, xs);
    };
    CHECK(grad_check(objective, flatten(p), flatten(grads), 1e-5) <= 1e-4);
}

TEST_CASE("backward_sequence validates its inputs") {
    const RaeParams p = init_params(kTiny, 3);
    const auto xs = random_sequence(kTiny, 2, 9);
    const auto fwd = forward_sequence(p, xs);
    CHECK_THROWS_AS(backward_sequence(p, {}, xs, fwd.x_hats), std::invalid_argument);
    CHECK_THROWS_AS(backward_sequence(p, fwd.caches, {xs[0]}, fwd.x_hats),
                    std::invalid_argument);
}

TEST_CASE("model bytes round-trip exactly") {
    const RaeParams p = init_params(RaeDims{8, 4, 2, 4, 2}, 2718);
    const Bytes bytes = save_model(p);
    const RaeParams q = load_model(bytes);
    CHECK(q.dims == p.dims);
    CHECK(flatten(q) == flatten(p)); // bit-identical doubles
    CHECK(model_fingerprint(q) == model_fingerprint(p));
}

TEST_CASE("model loader rejects malformed bytes") {
    const RaeParams p = init_params(kTiny, 1);
    Bytes bytes = save_model(p);

    Bytes truncated(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));
    CHECK_THROWS_AS(load_model(truncated), FormatError);

    Bytes flipped = bytes;
    flipped[flipped.size() / 2] ^= 0xFF;
    CHECK_THROWS_AS(load_model(flipped), FormatError);

    Bytes bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_model(bad_magic), FormatError);

    Bytes empty;
    CHECK_THROWS_AS(load_model(empty), FormatError);
}

TEST_CASE("flatten and unflatten are inverses") {
    const RaeParams p = init_params(RaeDims{6, 3, 2, 3, 3}, 10);
    const Vec flat = flatten(p);
    CHECK(flat.size() == param_count(p.dims));
    const RaeParams q = unflatten(p.dims, flat);
    CHECK(flatten(q) == flat);
    CHECK_THROWS_AS(unflatten(p.dims, Vec::Zero(3)), std::invalid_argument);
}

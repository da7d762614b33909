#include "rae/model.hpp"

#include <string>
#include <utility>

namespace rae {

void validate_dims(const RaeDims& dims) {
    require(dims.d_in > 0 && dims.d_z > 0 && dims.d_h > 0 && dims.d_m > 0,
            "dims: all widths must be strictly positive");
    require(dims.d_h < dims.d_in, "dims: d_h must be smaller than d_in, got d_h=" +
                                      std::to_string(dims.d_h) + " d_in=" +
                                      std::to_string(dims.d_in));
    require(dims.n_channels > 0, "dims: n_channels must be positive");
    require(dims.d_in % dims.n_channels == 0, "dims: d_in must be divisible by n_channels");
}

RaeState zero_rae_state(const RaeDims& dims) {
    return RaeState{zero_lstm_state(dims.d_m), zero_lstm_state(dims.d_m)};
}

RaeParams init_params(const RaeDims& dims, std::uint64_t seed) {
    validate_dims(dims);
    SeededRng rng(seed);
    const Index hidden = dims.map_hidden();

    RaeParams p;
    p.dims = dims;
    p.phi_x = make_dense(dims.d_in, dims.d_z, Activation::Tanh, rng);
    p.g_enc.l1 = make_dense(dims.d_z + dims.d_m, hidden, Activation::Tanh, rng);
    p.g_enc.l2 = make_dense(hidden, dims.d_h, Activation::Identity, rng);
    p.f_enc = init_lstm_params(dims.d_z, dims.d_m, rng);
    p.g_dec.l1 = make_dense(dims.d_h, hidden, Activation::Tanh, rng);
    p.g_dec.l2 = make_dense(hidden, dims.d_z, Activation::Identity, rng);
    p.f_dec = init_lstm_params(dims.d_z, dims.d_m, rng);
    p.phi_z = make_dense(dims.d_z, dims.d_in, Activation::Tanh, rng);
    p.out_map.l1 = make_dense(dims.d_in + 2 * dims.d_m, hidden, Activation::Tanh, rng);
    p.out_map.l2 = make_dense(hidden, dims.d_in, Activation::Identity, rng);
    return p;
}

RaeParams zero_params(const RaeDims& dims) {
    validate_dims(dims);
    const Index hidden = dims.map_hidden();
    auto zero_dense = [](Index in, Index out, Activation act) {
        return DenseLayer{Mat::Zero(out, in), Vec::Zero(out), act};
    };
    RaeParams p;
    p.dims = dims;
    p.phi_x = zero_dense(dims.d_in, dims.d_z, Activation::Tanh);
    p.g_enc.l1 = zero_dense(dims.d_z + dims.d_m, hidden, Activation::Tanh);
    p.g_enc.l2 = zero_dense(hidden, dims.d_h, Activation::Identity);
    p.f_enc = zero_lstm_params(dims.d_z, dims.d_m);
    p.g_dec.l1 = zero_dense(dims.d_h, hidden, Activation::Tanh);
    p.g_dec.l2 = zero_dense(hidden, dims.d_z, Activation::Identity);
    p.f_dec = zero_lstm_params(dims.d_z, dims.d_m);
    p.phi_z = zero_dense(dims.d_z, dims.d_in, Activation::Tanh);
    p.out_map.l1 = zero_dense(dims.d_in + 2 * dims.d_m, hidden, Activation::Tanh);
    p.out_map.l2 = zero_dense(hidden, dims.d_in, Activation::Identity);
    return p;
}

namespace {

Vec concat2(const Vec& a, const Vec& b) {
    Vec out(a.size() + b.size());
    out << a, b;
    return out;
}

Vec concat3(const Vec& a, const Vec& b, const Vec& c) {
    Vec out(a.size() + b.size() + c.size());
    out << a, b, c;
    return out;
}

RaeStepCache encode_step_cached(const RaeParams& p, RaeState& s, const Vec& x) {
    RaeStepCache cache;
    cache.x = x;
    cache.z = affine(p.phi_x, x);
    cache.genc_hidden = affine(p.g_enc.l1, concat2(cache.z, s.enc.m));
    cache.h = affine(p.g_enc.l2, cache.genc_hidden);
    auto step = lstm_step(p.f_enc, cache.z, s.enc);
    cache.enc_lstm = std::move(step.cache);
    s.enc = std::move(step.state);
    return cache;
}

void decode_step_cached(const RaeParams& p, RaeState& s, const Vec& h, RaeStepCache& cache) {
    cache.gdec_hidden = affine(p.g_dec.l1, h);
    cache.zhat = affine(p.g_dec.l2, cache.gdec_hidden);
    cache.u = affine(p.phi_z, cache.zhat);
    cache.dec_c_prev = s.dec.c;
    cache.dec_m_prev = s.dec.m;
    cache.o_hidden = affine(p.out_map.l1, concat3(cache.u, s.dec.c, s.dec.m));
    cache.x_hat = affine(p.out_map.l2, cache.o_hidden);
    auto step = lstm_step(p.f_dec, cache.zhat, s.dec);
    cache.dec_lstm = std::move(step.cache);
    s.dec = std::move(step.state);
}

} // namespace

EncodeResult encode_step(const RaeParams& params, const RaeState& s, const Vec& x) {
    require(x.size() == params.dims.d_in, "encode_step: input length " +
                                              std::to_string(x.size()) + " != d_in " +
                                              std::to_string(params.dims.d_in));
    RaeState next = s;
    RaeStepCache cache = encode_step_cached(params, next, x);
    return EncodeResult{std::move(cache.h), std::move(next)};
}

DecodeResult decode_step(const RaeParams& params, const RaeState& s, const Vec& h) {
    require(h.size() == params.dims.d_h, "decode_step: code length " + std::to_string(h.size()) +
                                             " != d_h " + std::to_string(params.dims.d_h));
    RaeState next = s;
    RaeStepCache cache;
    decode_step_cached(params, next, h, cache);
    return DecodeResult{std::move(cache.x_hat), std::move(next)};
}

ForwardResult forward_sequence(const RaeParams& params, const std::vector<Vec>& xs) {
    require(!xs.empty(), "forward_sequence: empty sequence");
    ForwardResult result;
    result.x_hats.reserve(xs.size());
    result.codes.reserve(xs.size());
    result.caches.reserve(xs.size());

    RaeState state = zero_rae_state(params.dims);
    for (const Vec& x : xs) {
        require(x.size() == params.dims.d_in, "forward_sequence: input length != d_in");
        RaeStepCache cache = encode_step_cached(params, state, x);
        decode_step_cached(params, state, cache.h, cache);
        result.codes.push_back(cache.h);
        result.x_hats.push_back(cache.x_hat);
        result.caches.push_back(std::move(cache));
    }
    return result;
}

Scalar sequence_loss(const std::vector<Vec>& x_hats, const std::vector<Vec>& xs) {
    require(x_hats.size() == xs.size(), "sequence_loss: length mismatch");
    Scalar total = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) total += mse_loss(x_hats[t], xs[t]).loss;
    return total;
}

namespace {

struct DenseBack {
    Mat dW;
    Vec db;
    Vec dx;
};

// `out` is the layer's post-activation output from the forward pass.
DenseBack dense_backward(const DenseLayer& layer, const Vec& input, const Vec& out,
                         const Vec& dout) {
    const Vec da = dout.cwiseProduct(activation_grad_from_output(out, layer.act));
    return DenseBack{da * input.transpose(), da, layer.W.transpose() * da};
}

void add_dense(DenseLayer& acc, const Mat& dW, const Vec& db) {
    acc.W += dW;
    acc.b += db;
}

} // namespace

RaeGrads backward_sequence(const RaeParams& params, const std::vector<RaeStepCache>& caches,
                           const std::vector<Vec>& xs, const std::vector<Vec>& x_hats) {
    require(!caches.empty(), "backward_sequence: empty caches");
    require(caches.size() == xs.size() && caches.size() == x_hats.size(),
            "backward_sequence: caches do not match the sequence");
    const RaeDims& d = params.dims;
    require(caches.front().x.size() == d.d_in && caches.front().h.size() == d.d_h,
            "backward_sequence: cache widths do not match params");

    RaeGrads grads = zero_params(d);

    Vec dc_enc = Vec::Zero(d.d_m), dm_enc = Vec::Zero(d.d_m);
    Vec dc_dec = Vec::Zero(d.d_m), dm_dec = Vec::Zero(d.d_m);

    for (Index t = static_cast<Index>(caches.size()) - 1; t >= 0; --t) {
        const RaeStepCache& c = caches[static_cast<std::size_t>(t)];
        const Vec dx_hat = mse_loss(x_hats[static_cast<std::size_t>(t)],
                                    xs[static_cast<std::size_t>(t)])
                               .grad;

        // Reconstruction map o(concat(u, c_dec, m_dec)).
        auto o2 = dense_backward(params.out_map.l2, c.o_hidden, c.x_hat, dx_hat);
        add_dense(grads.out_map.l2, o2.dW, o2.db);
        const Vec o_in = concat3(c.u, c.dec_c_prev, c.dec_m_prev);
        auto o1 = dense_backward(params.out_map.l1, o_in, c.o_hidden, o2.dx);
        add_dense(grads.out_map.l1, o1.dW, o1.db);
        const Vec du = o1.dx.head(d.d_in);

        // phi_z
        auto pz = dense_backward(params.phi_z, c.zhat, c.u, du);
        add_dense(grads.phi_z, pz.dW, pz.db);

        // Decoder cell; upstream gradients come from step t+1's pre-state.
        auto dec_back = lstm_step_backward(params.f_dec, c.dec_lstm, dc_dec, dm_dec);
        accumulate(grads.f_dec, dec_back.dparams);

        const Vec dzhat = pz.dx + dec_back.dx;
        dc_dec = o1.dx.segment(d.d_in, d.d_m) + dec_back.dstate.c;
        dm_dec = o1.dx.tail(d.d_m) + dec_back.dstate.m;

        // g_dec
        auto gd2 = dense_backward(params.g_dec.l2, c.gdec_hidden, c.zhat, dzhat);
        add_dense(grads.g_dec.l2, gd2.dW, gd2.db);
        auto gd1 = dense_backward(params.g_dec.l1, c.h, c.gdec_hidden, gd2.dx);
        add_dense(grads.g_dec.l1, gd1.dW, gd1.db);
        const Vec dh = gd1.dx;

        // g_enc over concat(z, m_enc_prev).
        auto ge2 = dense_backward(params.g_enc.l2, c.genc_hidden, c.h, dh);
        add_dense(grads.g_enc.l2, ge2.dW, ge2.db);
        const Vec ge_in = concat2(c.z, c.enc_lstm.m_prev);
        auto ge1 = dense_backward(params.g_enc.l1, ge_in, c.genc_hidden, ge2.dx);
        add_dense(grads.g_enc.l1, ge1.dW, ge1.db);

        // Encoder cell.
        auto enc_back = lstm_step_backward(params.f_enc, c.enc_lstm, dc_enc, dm_enc);
        accumulate(grads.f_enc, enc_back.dparams);

        const Vec dz = ge1.dx.head(d.d_z) + enc_back.dx;
        dc_enc = enc_back.dstate.c;
        dm_enc = ge1.dx.tail(d.d_m) + enc_back.dstate.m;

        // phi_x
        auto px = dense_backward(params.phi_x, c.x, c.z, dz);
        add_dense(grads.phi_x, px.dW, px.db);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Flat views and persistence
// ---------------------------------------------------------------------------

namespace {

// Enumerates every tensor in the fixed documented order.
template <class Params, class Fn>
void for_each_tensor(Params& p, Fn&& fn) {
    auto dense = [&](const char* base, auto& layer) {
        fn(std::string(base) + ".W", layer.W);
        fn(std::string(base) + ".b", layer.b);
    };
    auto lstm = [&](const char* base, auto& cell) {
        fn(std::string(base) + ".W_i", cell.W_i);
        fn(std::string(base) + ".U_i", cell.U_i);
        fn(std::string(base) + ".b_i", cell.b_i);
        fn(std::string(base) + ".W_o", cell.W_o);
        fn(std::string(base) + ".U_o", cell.U_o);
        fn(std::string(base) + ".b_o", cell.b_o);
        fn(std::string(base) + ".W_f", cell.W_f);
        fn(std::string(base) + ".U_f", cell.U_f);
        fn(std::string(base) + ".b_f", cell.b_f);
        fn(std::string(base) + ".W_c", cell.W_c);
        fn(std::string(base) + ".U_c", cell.U_c);
        fn(std::string(base) + ".b_c", cell.b_c);
    };
    dense("phi_x", p.phi_x);
    dense("g_enc.l1", p.g_enc.l1);
    dense("g_enc.l2", p.g_enc.l2);
    lstm("f_enc", p.f_enc);
    dense("g_dec.l1", p.g_dec.l1);
    dense("g_dec.l2", p.g_dec.l2);
    lstm("f_dec", p.f_dec);
    dense("phi_z", p.phi_z);
    dense("out_map.l1", p.out_map.l1);
    dense("out_map.l2", p.out_map.l2);
}

Bytes tensor_sections(const RaeParams& params) {
    ByteWriter w;
    for_each_tensor(params, [&](const std::string& name, const auto& tensor) {
        w.put_tag(name);
        w.put_u32(static_cast<std::uint32_t>(tensor.rows()));
        w.put_u32(static_cast<std::uint32_t>(tensor.cols()));
        for (Index r = 0; r < tensor.rows(); ++r)
            for (Index c = 0; c < tensor.cols(); ++c) w.put_f64(tensor(r, c));
    });
    return w.take();
}

} // namespace

Index param_count(const RaeDims& dims) {
    validate_dims(dims);
    RaeParams skeleton = zero_params(dims);
    Index n = 0;
    for_each_tensor(skeleton, [&](const std::string&, const auto& t) { n += t.size(); });
    return n;
}

Vec flatten(const RaeParams& params) {
    Vec flat(param_count(params.dims));
    Index at = 0;
    for_each_tensor(params, [&](const std::string&, const auto& t) {
        for (Index r = 0; r < t.rows(); ++r)
            for (Index c = 0; c < t.cols(); ++c) flat(at++) = t(r, c);
    });
    return flat;
}

RaeParams unflatten(const RaeDims& dims, const Vec& flat) {
    require(flat.size() == param_count(dims), "unflatten: flat vector has wrong length");
    RaeParams p = zero_params(dims);
    Index at = 0;
    for_each_tensor(p, [&](const std::string&, auto& t) {
        for (Index r = 0; r < t.rows(); ++r)
            for (Index c = 0; c < t.cols(); ++c) t(r, c) = flat(at++);
    });
    return p;
}

Bytes save_model(const RaeParams& params) {
    validate_dims(params.dims);
    ByteWriter w;
    w.put_u8('R');
    w.put_u8('A');
    w.put_u8('E');
    w.put_u8('M');
    w.put_u16(kModelVersion);
    w.put_u32(static_cast<std::uint32_t>(params.dims.d_in));
    w.put_u32(static_cast<std::uint32_t>(params.dims.d_z));
    w.put_u32(static_cast<std::uint32_t>(params.dims.d_h));
    w.put_u32(static_cast<std::uint32_t>(params.dims.d_m));
    w.put_u32(static_cast<std::uint32_t>(params.dims.n_channels));
    const Bytes payload = tensor_sections(params);
    w.put_bytes(payload);
    w.put_u32(crc32(payload));
    return w.take();
}

RaeParams load_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const char magic[5] = {static_cast<char>(r.get_u8()), static_cast<char>(r.get_u8()),
                           static_cast<char>(r.get_u8()), static_cast<char>(r.get_u8()), 0};
    if (std::string(magic) != "RAEM")
        throw FormatError("model: bad magic at offset 0 (expected RAEM)");
    const std::uint16_t version = r.get_u16();
    if (version != kModelVersion)
        throw FormatError("model: unsupported version " + std::to_string(version));

    RaeDims dims;
    dims.d_in = static_cast<Index>(r.get_u32());
    dims.d_z = static_cast<Index>(r.get_u32());
    dims.d_h = static_cast<Index>(r.get_u32());
    dims.d_m = static_cast<Index>(r.get_u32());
    dims.n_channels = static_cast<Index>(r.get_u32());
    try {
        validate_dims(dims);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model: invalid dims: ") + e.what());
    }

    if (r.remaining() < 4) throw FormatError("model: missing checksum");
    const std::size_t payload_begin = r.pos();
    const std::size_t payload_size = r.remaining() - 4;
    const auto payload = bytes.subspan(payload_begin, payload_size);

    RaeParams p = zero_params(dims);
    for_each_tensor(p, [&](const std::string& name, auto& tensor) {
        const std::string tag = r.get_tag();
        if (tag != name)
            throw FormatError("model: expected section '" + name + "', found '" + tag +
                              "' at offset " + std::to_string(r.pos()));
        const auto rows = static_cast<Index>(r.get_u32());
        const auto cols = static_cast<Index>(r.get_u32());
        if (rows != tensor.rows() || cols != tensor.cols())
            throw FormatError("model: section '" + name + "' has shape " + std::to_string(rows) +
                              "x" + std::to_string(cols) + ", expected " +
                              std::to_string(tensor.rows()) + "x" + std::to_string(tensor.cols()));
        for (Index rr = 0; rr < rows; ++rr)
            for (Index cc = 0; cc < cols; ++cc) tensor(rr, cc) = r.get_f64();
    });

    if (r.pos() != payload_begin + payload_size)
        throw FormatError("model: trailing bytes after tensor sections at offset " +
                          std::to_string(r.pos()));
    const std::uint32_t stored = r.get_u32();
    const std::uint32_t actual = crc32(payload);
    if (stored != actual)
        throw FormatError("model: checksum mismatch (stored " + std::to_string(stored) +
                          ", computed " + std::to_string(actual) + ")");
    return p;
}

std::uint32_t model_fingerprint(const RaeParams& params) {
    return crc32(tensor_sections(params));
}

} // namespace rae

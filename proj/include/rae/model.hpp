#pragma once

#include "rae/bytes.hpp"
#include "rae/lstm.hpp"
#include "rae/nn.hpp"
#include "rae/types.hpp"

#include <cstdint>
#include <vector>

namespace rae {

/// Widths of the recurrent autoencoder. d_in is the flattened window width
/// (window resolution x channel count), d_h the stored code width.
struct RaeDims {
    Index d_in = 0;
    Index d_z = 0;
    Index d_h = 0;
    Index d_m = 0;
    Index n_channels = 1;

    /// Hidden width shared by the two-layer maps.
    Index map_hidden() const { return std::max(d_in, 2 * d_h); }

    bool operator==(const RaeDims&) const = default;
};

void validate_dims(const RaeDims& dims);

// Hidden layer is tanh, output layer identity so codes and reconstructions
// are not range-limited.
struct TwoLayerMap {
    DenseLayer l1;
    DenseLayer l2;
};

/// All learned weights of the encoder/decoder pair.
struct RaeParams {
    DenseLayer phi_x;    // d_in -> d_z feature map, tanh
    TwoLayerMap g_enc;   // (d_z + d_m) -> d_h code map
    LstmParams f_enc;    // encoder cell, input d_z
    TwoLayerMap g_dec;   // d_h -> d_z code expansion
    LstmParams f_dec;    // decoder cell, input d_z
    DenseLayer phi_z;    // d_z -> d_in feature expansion, tanh
    TwoLayerMap out_map; // (d_in + 2 d_m) -> d_in reconstruction
    RaeDims dims;
};

// Gradients share the parameter layout.
using RaeGrads = RaeParams;

/// Paired encoder/decoder cell states; value-semantic so window probes can
/// copy and discard candidates.
struct RaeState {
    LstmState enc;
    LstmState dec;
};

RaeState zero_rae_state(const RaeDims& dims);

/// Seeded deterministic initialization (Glorot weights, zero biases except
/// forget gates at +1). Rejects invalid dims, in particular d_h >= d_in.
RaeParams init_params(const RaeDims& dims, std::uint64_t seed);

RaeParams zero_params(const RaeDims& dims);

struct EncodeResult {
    Vec h; // code, width d_h
    RaeState state;
};

/// One encoder step. The code is produced from the hidden state held
/// BEFORE the cell consumes this window's feature; the decoder half of the
/// state passes through untouched. Pure.
EncodeResult encode_step(const RaeParams& params, const RaeState& s, const Vec& x);

struct DecodeResult {
    Vec x_hat; // reconstruction, width d_in
    RaeState state;
};

/// One decoder step, mirroring encode_step: the reconstruction uses the
/// pre-update decoder state, then the decoder cell advances on the decoded
/// feature. Depends only on params and the code sequence. Pure.
DecodeResult decode_step(const RaeParams& params, const RaeState& s, const Vec& h);

// Per-step forward bookkeeping for backpropagation through time.
struct RaeStepCache {
    Vec x, z;
    Vec genc_hidden, h;
    LstmCache enc_lstm;
    Vec gdec_hidden, zhat, u;
    Vec dec_c_prev, dec_m_prev;
    Vec o_hidden, x_hat;
    LstmCache dec_lstm;
};

struct ForwardResult {
    std::vector<Vec> x_hats;
    std::vector<Vec> codes;
    std::vector<RaeStepCache> caches;
};

/// Unrolls encode/decode over a sequence from the zero state.
ForwardResult forward_sequence(const RaeParams& params, const std::vector<Vec>& xs);

/// Gradients of sum_t mse(x_hat_t, x_t) w.r.t. every parameter.
RaeGrads backward_sequence(const RaeParams& params, const std::vector<RaeStepCache>& caches,
                           const std::vector<Vec>& xs, const std::vector<Vec>& x_hats);

Scalar sequence_loss(const std::vector<Vec>& x_hats, const std::vector<Vec>& xs);

// Flat views used by the optimizer, the gradient checker, and persistence.
// Tensor order is fixed: phi_x, g_enc, f_enc, g_dec, f_dec, phi_z, out_map,
// matrices row-major, each LSTM as W_i,U_i,b_i,W_o,U_o,b_o,W_f,U_f,b_f,W_c,U_c,b_c.
Index param_count(const RaeDims& dims);
Vec flatten(const RaeParams& params);
RaeParams unflatten(const RaeDims& dims, const Vec& flat);

// Model file: "RAEM", version u16 LE, dims as 5 x u32 LE
// (d_in, d_z, d_h, d_m, n_channels), named tensor sections in flatten
// order (tag, u32 rows, u32 cols, row-major f64 LE), CRC-32 of the
// section bytes.
inline constexpr std::uint16_t kModelVersion = 1;

Bytes save_model(const RaeParams& params);
RaeParams load_model(std::span<const std::uint8_t> bytes);

/// CRC-32 of the serialized tensor sections; stored in compressed streams
/// to pin the model they were produced with.
std::uint32_t model_fingerprint(const RaeParams& params);

} // namespace rae

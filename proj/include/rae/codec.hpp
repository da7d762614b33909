#pragma once

#include "rae/bytes.hpp"
#include "rae/model.hpp"
#include "rae/preprocess.hpp"
#include "rae/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace rae {

struct CodecConfig {
    Scalar epsilon = 0.1; // max tolerable deviation, normalized units
    Index rae_len = 32;   // window resolution fed to the model
    Index min_window = 0; // 0 -> max(2, rae_len / 4)
    Index max_window = 0; // 0 -> 8 * rae_len

    Index effective_min() const { return min_window > 0 ? min_window : std::max<Index>(2, rae_len / 4); }
    Index effective_max() const { return max_window > 0 ? max_window : 8 * rae_len; }
};

void validate_codec_config(const CodecConfig& cfg);

enum class BlockKind : std::uint8_t { Coded = 0, Raw = 1 };

/// One window of the stream: either d_h 32-bit codes or verbatim 32-bit
/// samples (time-major). Raw windows do not advance the recurrent state.
struct Block {
    BlockKind kind = BlockKind::Coded;
    std::uint16_t window_len = 0;
    std::vector<float> payload;

    bool operator==(const Block&) const = default;
};

struct StreamHeader {
    std::uint16_t version = 1;
    std::uint16_t flags = 0;
    std::uint64_t n_samples = 0;
    std::uint16_t n_channels = 0;
    std::uint16_t rae_len = 0;
    std::uint16_t d_h = 0;
    float epsilon = 0;
    std::vector<float> scale;  // per channel
    std::vector<float> offset; // per channel
    std::uint32_t model_fingerprint = 0;

    bool operator==(const StreamHeader&) const = default;
};

struct CompressedStream {
    StreamHeader header;
    std::vector<Block> blocks;

    bool operator==(const CompressedStream&) const = default;
};

inline constexpr std::uint16_t kStreamVersion = 1;

// Wire format, all little-endian: "RAEC", version u16, flags u16,
// n_samples u64, n_channels u16, rae_len u16, d_h u16, epsilon f32,
// per-channel scale f32 + offset f32, model fingerprint u32, block count
// u32; blocks as kind u8, window_len u16, payload f32s; CRC-32 of all
// preceding bytes.
Bytes serialize_stream(const CompressedStream& stream);
CompressedStream parse_stream(std::span<const std::uint8_t> bytes);

struct SearchOutcome {
    std::optional<Index> input_len;
    int probes = 0;
};

/// Stride-halving schedule over candidate window lengths. Starts at
/// min(remaining, max_window) with stride input_len/2; a passing probe
/// records the length and grows by the stride, a failing one shrinks;
/// lengths clamp to [min_window, min(remaining, max_window)] and the
/// stride halves until it vanishes. Returns the last recorded length.
/// Exact only when `passes` is monotone in the length; otherwise the
/// result is still a valid (possibly sub-optimal) window.
SearchOutcome adaptive_window_search(Index remaining, Index min_window, Index max_window,
                                     const std::function<bool(Index)>& passes);

/// adaptive_window_search with the model probe: resample the window to the
/// model resolution, encode, round the code to 32 bits, decode, resample
/// back, and test the original-resolution deviation against epsilon.
/// Every probe starts from a copy of `committed`.
SearchOutcome search_window(const RaeParams& params, const RaeState& committed,
                            const TimeSeries& series, Index st, const CodecConfig& cfg);

struct DecompressResult {
    Mat normalized; // n_samples x channels
    Mat raw;        // denormalized via the header's 32-bit scale/offset
};

struct CompressResult {
    CompressedStream stream;
    DecompressResult reconstruction; // exactly what decompress() will produce
};

/// Adaptive-window compression of a normalized series with a hard
/// whole-series deviation guarantee: every coded window reconstructs within
/// epsilon in the uniform norm, raw windows are stored verbatim. The
/// recurrent state advances only on coded windows.
CompressResult compress(const RaeParams& params, const TimeSeries& series,
                        const CodecConfig& cfg);

/// Standalone decompression; needs only the decoder half of the model.
/// Rejects streams whose fingerprint does not match `params` before any
/// decoding. Bit-identical to the reconstruction compress() returned.
DecompressResult decompress(const RaeParams& params, const CompressedStream& stream);

struct Deviation {
    Scalar linf;
    Scalar rmse;
};

/// Uniform norm and root-mean-square error over all samples and channels.
Deviation deviation_metrics(const Mat& x, const Mat& x_hat);

/// Serialized stream bytes over the original at 4 bytes per sample per channel.
Scalar stream_ratio(const CompressedStream& stream, std::uint64_t n_samples, Index channels);

std::size_t count_raw_blocks(const CompressedStream& stream);

} // namespace rae

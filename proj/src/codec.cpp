#include "rae/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rae {

void validate_codec_config(const CodecConfig& cfg) {
    require(cfg.epsilon > 0, "codec config: epsilon must be positive");
    require(cfg.rae_len >= 2, "codec config: rae_len must be >= 2");
    const Index min_w = cfg.effective_min();
    const Index max_w = cfg.effective_max();
    require(min_w >= 2, "codec config: min_window must be >= 2");
    require(min_w <= max_w, "codec config: min_window must not exceed max_window");
    require(max_w <= 65535, "codec config: max_window " + std::to_string(max_w) +
                                " exceeds the u16 window length field");
}

// ---------------------------------------------------------------------------
// Bitstream
// ---------------------------------------------------------------------------

Bytes serialize_stream(const CompressedStream& stream) {
    const StreamHeader& h = stream.header;
    require(h.scale.size() == h.n_channels && h.offset.size() == h.n_channels,
            "serialize_stream: per-channel scale/offset count != n_channels");
    ByteWriter w;
    w.put_u8('R');
    w.put_u8('A');
    w.put_u8('E');
    w.put_u8('C');
    w.put_u16(h.version);
    w.put_u16(h.flags);
    w.put_u64(h.n_samples);
    w.put_u16(h.n_channels);
    w.put_u16(h.rae_len);
    w.put_u16(h.d_h);
    w.put_f32(h.epsilon);
    for (std::size_t c = 0; c < h.scale.size(); ++c) {
        w.put_f32(h.scale[c]);
        w.put_f32(h.offset[c]);
    }
    w.put_u32(h.model_fingerprint);
    w.put_u32(static_cast<std::uint32_t>(stream.blocks.size()));

    for (const Block& blk : stream.blocks) {
        require(blk.window_len >= 1, "serialize_stream: zero-length block");
        const std::size_t expected = blk.kind == BlockKind::Coded
                                         ? h.d_h
                                         : static_cast<std::size_t>(blk.window_len) * h.n_channels;
        require(blk.payload.size() == expected, "serialize_stream: block payload size mismatch");
        w.put_u8(static_cast<std::uint8_t>(blk.kind));
        w.put_u16(blk.window_len);
        for (float v : blk.payload) w.put_f32(v);
    }
    w.put_u32(crc32(w.bytes()));
    return w.take();
}

CompressedStream parse_stream(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw FormatError("stream: file too short for a magic");
    if (!(bytes[0] == 'R' && bytes[1] == 'A' && bytes[2] == 'E' && bytes[3] == 'C'))
        throw FormatError("stream: bad magic at offset 0 (expected RAEC)");
    if (bytes.size() < 8) throw FormatError("stream: file too short for a checksum");
    ByteReader tail(bytes.subspan(bytes.size() - 4));
    const std::uint32_t stored = tail.get_u32();
    const std::uint32_t actual = crc32(bytes.first(bytes.size() - 4));
    if (stored != actual)
        throw FormatError("stream: checksum mismatch (stored " + std::to_string(stored) +
                          ", computed " + std::to_string(actual) + ")");

    ByteReader r(bytes.first(bytes.size() - 4));
    r.get_u32(); // magic, already validated

    CompressedStream stream;
    StreamHeader& h = stream.header;
    h.version = r.get_u16();
    if (h.version != kStreamVersion)
        throw FormatError("stream: unsupported version " + std::to_string(h.version));
    h.flags = r.get_u16();
    h.n_samples = r.get_u64();
    h.n_channels = r.get_u16();
    h.rae_len = r.get_u16();
    h.d_h = r.get_u16();
    h.epsilon = r.get_f32();
    if (h.n_channels == 0) throw FormatError("stream: zero channels");
    h.scale.resize(h.n_channels);
    h.offset.resize(h.n_channels);
    for (std::size_t c = 0; c < h.scale.size(); ++c) {
        h.scale[c] = r.get_f32();
        h.offset[c] = r.get_f32();
    }
    h.model_fingerprint = r.get_u32();
    const std::uint32_t n_blocks = r.get_u32();

    std::uint64_t covered = 0;
    stream.blocks.reserve(n_blocks);
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        Block blk;
        const std::uint8_t kind = r.get_u8();
        if (kind > 1)
            throw FormatError("stream: unknown block kind " + std::to_string(kind) +
                              " in block " + std::to_string(b));
        blk.kind = static_cast<BlockKind>(kind);
        blk.window_len = r.get_u16();
        if (blk.window_len == 0)
            throw FormatError("stream: zero-length block " + std::to_string(b));
        const std::size_t count = blk.kind == BlockKind::Coded
                                      ? h.d_h
                                      : static_cast<std::size_t>(blk.window_len) * h.n_channels;
        blk.payload.resize(count);
        for (std::size_t i = 0; i < count; ++i) blk.payload[i] = r.get_f32();
        covered += blk.window_len;
        stream.blocks.push_back(std::move(blk));
    }
    if (!r.exhausted())
        throw FormatError("stream: trailing bytes after blocks at offset " +
                          std::to_string(r.pos()));
    if (covered != h.n_samples)
        throw FormatError("stream: blocks cover " + std::to_string(covered) +
                          " samples, header says " + std::to_string(h.n_samples));
    return stream;
}

// ---------------------------------------------------------------------------
// Window search
// ---------------------------------------------------------------------------

SearchOutcome adaptive_window_search(Index remaining, Index min_window, Index max_window,
                                     const std::function<bool(Index)>& passes) {
    require(remaining >= min_window, "adaptive_window_search: remaining < min_window");
    require(min_window >= 1 && min_window <= max_window, "adaptive_window_search: bad bounds");

    const Index hi = std::min(remaining, max_window);
    Index input_len = hi;
    Index stride = input_len / 2;

    SearchOutcome outcome;
    while (stride >= 1) {
        ++outcome.probes;
        if (passes(input_len)) {
            outcome.input_len = input_len;
            input_len += stride;
        } else {
            input_len -= stride;
        }
        input_len = std::clamp(input_len, min_window, hi);
        stride /= 2;
    }
    return outcome;
}

namespace {

Vec quantize_code(const Vec& h) {
    Vec q(h.size());
    for (Index i = 0; i < h.size(); ++i) q(i) = static_cast<Scalar>(static_cast<float>(h(i)));
    return q;
}

struct WindowProbe {
    Vec code_q;  // code after 32-bit rounding, as doubles
    Mat recon;   // reconstruction at original resolution
    RaeState state;
    Scalar linf;
};

WindowProbe run_window(const RaeParams& params, const RaeState& committed,
                       const TimeSeries& series, Index st, Index len, Index rae_len) {
    WindowProbe probe;
    const Mat window = series.samples.middleRows(st, len);
    const Vec x = pack_window(window, rae_len);
    EncodeResult enc = encode_step(params, committed, x);
    probe.code_q = quantize_code(enc.h);
    DecodeResult dec = decode_step(params, enc.state, probe.code_q);
    probe.state = std::move(dec.state);
    probe.recon = unpack_window(dec.x_hat, rae_len, series.channels(), len);
    probe.linf = (probe.recon - window).cwiseAbs().maxCoeff();
    return probe;
}

} // namespace

SearchOutcome search_window(const RaeParams& params, const RaeState& committed,
                            const TimeSeries& series, Index st, const CodecConfig& cfg) {
    validate_codec_config(cfg);
    require(st >= 0 && st < series.n(), "search_window: start out of range");
    return adaptive_window_search(
        series.n() - st, cfg.effective_min(), cfg.effective_max(), [&](Index len) {
            return run_window(params, committed, series, st, len, cfg.rae_len).linf <= cfg.epsilon;
        });
}

// ---------------------------------------------------------------------------
// Compression / decompression
// ---------------------------------------------------------------------------

namespace {

Block make_raw_block(const TimeSeries& series, Index st, Index len) {
    Block blk;
    blk.kind = BlockKind::Raw;
    blk.window_len = static_cast<std::uint16_t>(len);
    blk.payload.reserve(static_cast<std::size_t>(len * series.channels()));
    for (Index t = 0; t < len; ++t)
        for (Index c = 0; c < series.channels(); ++c)
            blk.payload.push_back(static_cast<float>(series.samples(st + t, c)));
    return blk;
}

// The one decoding path: both the decompressor and the compressor's returned
// reconstruction go through here, which is what makes them bit-identical.
Mat decode_blocks(const RaeParams& params, const CompressedStream& stream) {
    const StreamHeader& h = stream.header;
    const Index channels = static_cast<Index>(h.n_channels);
    const Index rae_len = static_cast<Index>(h.rae_len);
    Mat out(static_cast<Index>(h.n_samples), channels);

    RaeState state = zero_rae_state(params.dims);
    Index at = 0;
    for (const Block& blk : stream.blocks) {
        const Index len = static_cast<Index>(blk.window_len);
        if (blk.kind == BlockKind::Coded) {
            Vec code(params.dims.d_h);
            for (Index i = 0; i < code.size(); ++i)
                code(i) = static_cast<Scalar>(blk.payload[static_cast<std::size_t>(i)]);
            DecodeResult dec = decode_step(params, state, code);
            state = std::move(dec.state);
            out.middleRows(at, len) = unpack_window(dec.x_hat, rae_len, channels, len);
        } else {
            for (Index t = 0; t < len; ++t)
                for (Index c = 0; c < channels; ++c)
                    out(at + t, c) = static_cast<Scalar>(
                        blk.payload[static_cast<std::size_t>(t * channels + c)]);
        }
        at += len;
    }
    return out;
}

Mat denormalize_with_header(const Mat& normalized, const StreamHeader& h) {
    Mat raw(normalized.rows(), normalized.cols());
    for (Index c = 0; c < normalized.cols(); ++c)
        raw.col(c) = normalized.col(c).array() * static_cast<Scalar>(h.scale[static_cast<std::size_t>(c)]) +
                     static_cast<Scalar>(h.offset[static_cast<std::size_t>(c)]);
    return raw;
}

} // namespace

CompressResult compress(const RaeParams& params, const TimeSeries& series,
                        const CodecConfig& cfg) {
    validate_codec_config(cfg);
    require(series.n() >= 1, "compress: empty series");
    require(params.dims.n_channels == series.channels(),
            "compress: model expects " + std::to_string(params.dims.n_channels) +
                " channels, series has " + std::to_string(series.channels()));
    require(params.dims.d_in == cfg.rae_len * series.channels(),
            "compress: model d_in " + std::to_string(params.dims.d_in) +
                " != rae_len * channels = " + std::to_string(cfg.rae_len * series.channels()));

    const Index n = series.n();
    const Index min_w = cfg.effective_min();

    CompressResult result;
    StreamHeader& h = result.stream.header;
    h.version = kStreamVersion;
    h.n_samples = static_cast<std::uint64_t>(n);
    h.n_channels = static_cast<std::uint16_t>(series.channels());
    h.rae_len = static_cast<std::uint16_t>(cfg.rae_len);
    h.d_h = static_cast<std::uint16_t>(params.dims.d_h);
    h.epsilon = static_cast<float>(cfg.epsilon);
    for (Index c = 0; c < series.channels(); ++c) {
        h.scale.push_back(static_cast<float>(series.scale(c)));
        h.offset.push_back(static_cast<float>(series.offset(c)));
    }
    h.model_fingerprint = model_fingerprint(params);

    RaeState state = zero_rae_state(params.dims);
    Index st = 0;
    while (st < n) {
        const Index remaining = n - st;
        if (remaining < min_w) {
            result.stream.blocks.push_back(make_raw_block(series, st, remaining));
            st = n;
            break;
        }
        const SearchOutcome found = search_window(params, state, series, st, cfg);
        if (!found.input_len) {
            // Nothing met epsilon: store the smallest window verbatim and
            // leave the recurrent state untouched so decoding can mirror it.
            result.stream.blocks.push_back(make_raw_block(series, st, min_w));
            st += min_w;
            continue;
        }
        const Index len = *found.input_len;
        WindowProbe chosen = run_window(params, state, series, st, len, cfg.rae_len);
        if (chosen.linf > cfg.epsilon)
            throw std::logic_error("compress: committed window exceeds epsilon");

        Block blk;
        blk.kind = BlockKind::Coded;
        blk.window_len = static_cast<std::uint16_t>(len);
        blk.payload.reserve(static_cast<std::size_t>(chosen.code_q.size()));
        for (Index i = 0; i < chosen.code_q.size(); ++i)
            blk.payload.push_back(static_cast<float>(chosen.code_q(i)));
        result.stream.blocks.push_back(std::move(blk));

        state = std::move(chosen.state);
        st += len;
    }

    result.reconstruction.normalized = decode_blocks(params, result.stream);
    result.reconstruction.raw = denormalize_with_header(result.reconstruction.normalized, h);
    return result;
}

DecompressResult decompress(const RaeParams& params, const CompressedStream& stream) {
    const StreamHeader& h = stream.header;
    const std::uint32_t fp = model_fingerprint(params);
    if (fp != h.model_fingerprint)
        throw FormatError("decompress: model fingerprint " + std::to_string(fp) +
                          " does not match stream fingerprint " +
                          std::to_string(h.model_fingerprint));
    require(params.dims.n_channels == static_cast<Index>(h.n_channels),
            "decompress: channel count mismatch");
    require(params.dims.d_h == static_cast<Index>(h.d_h), "decompress: code width mismatch");
    require(params.dims.d_in == static_cast<Index>(h.rae_len) * static_cast<Index>(h.n_channels),
            "decompress: window resolution mismatch");

    DecompressResult result;
    result.normalized = decode_blocks(params, stream);
    result.raw = denormalize_with_header(result.normalized, h);
    return result;
}

Deviation deviation_metrics(const Mat& x, const Mat& x_hat) {
    require(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(),
            "deviation_metrics: shape mismatch");
    require(x.size() > 0, "deviation_metrics: empty input");
    const Mat diff = x - x_hat;
    return Deviation{diff.cwiseAbs().maxCoeff(),
                     std::sqrt(diff.squaredNorm() / static_cast<Scalar>(diff.size()))};
}

Scalar stream_ratio(const CompressedStream& stream, std::uint64_t n_samples, Index channels) {
    require(n_samples > 0 && channels > 0, "stream_ratio: empty original");
    const auto compressed = static_cast<Scalar>(serialize_stream(stream).size());
    return compressed / (static_cast<Scalar>(n_samples) * static_cast<Scalar>(channels) * 4.0);
}

std::size_t count_raw_blocks(const CompressedStream& stream) {
    std::size_t n = 0;
    for (const Block& blk : stream.blocks)
        if (blk.kind == BlockKind::Raw) ++n;
    return n;
}

} // namespace rae

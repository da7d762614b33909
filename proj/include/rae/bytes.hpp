#pragma once

#include "rae/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rae {

using Bytes = std::vector<std::uint8_t>;

/// CRC-32 (IEEE 802.3, reflected) over a byte range.
std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed = 0);

// Little-endian append-only writer used by the model and stream formats.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u16(std::uint16_t v);
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_f32(float v);
    void put_f64(double v);
    void put_bytes(std::span<const std::uint8_t> data);
    void put_tag(const std::string& name); // u8 length + ASCII bytes

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

// Bounds-checked little-endian reader; throws FormatError on overrun,
// reporting the byte offset that could not be satisfied.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8();
    std::uint16_t get_u16();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    float get_f32();
    double get_f64();
    std::string get_tag();

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n);

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Writes `data` to `path` atomically: a sibling temp file is renamed over
/// the target only after a successful write, so failures leave no partial file.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> data);
void write_file_atomic(const std::string& path, const std::string& text);

Bytes read_file(const std::string& path);

} // namespace rae

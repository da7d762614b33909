#include "rae/bytes.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace rae {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
        table[i] = c;
    }
    return table;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed) {
    static const auto table = make_crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::uint8_t b : data)
        c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void ByteWriter::put_u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_f32(float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
}

void ByteWriter::put_f64(double v) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(bits);
}

void ByteWriter::put_bytes(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteWriter::put_tag(const std::string& name) {
    if (name.size() > 255) throw std::invalid_argument("tag too long: " + name);
    put_u8(static_cast<std::uint8_t>(name.size()));
    for (char ch : name) buf_.push_back(static_cast<std::uint8_t>(ch));
}

void ByteReader::need(std::size_t n) {
    if (pos_ + n > data_.size())
        throw FormatError("truncated input: need " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_) +
                          ", have " + std::to_string(data_.size() - pos_));
}

std::uint8_t ByteReader::get_u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::get_u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                      static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

float ByteReader::get_f32() {
    std::uint32_t bits = get_u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double ByteReader::get_f64() {
    std::uint64_t bits = get_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string ByteReader::get_tag() {
    std::size_t n = get_u8();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> data) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("write failed: " + tmp);
        }
    }
    fs::rename(tmp, path);
}

void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, std::span<const std::uint8_t>(
                                reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open: " + path);
    const auto size = in.tellg();
    in.seekg(0);
    Bytes data(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(data.data()), size);
    if (!in) throw std::runtime_error("read failed: " + path);
    return data;
}

} // namespace rae

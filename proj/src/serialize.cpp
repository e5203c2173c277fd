#include "amc/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace amc {

void ByteWriter::u16(uint16_t x) {
    buf_.push_back(static_cast<uint8_t>(x & 0xff));
    buf_.push_back(static_cast<uint8_t>(x >> 8));
}

void ByteWriter::u32(uint32_t x) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(x >> (8 * i)));
}

void ByteWriter::u64(uint64_t x) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(x >> (8 * i)));
}

void ByteWriter::f32(float x) {
    uint32_t u;
    std::memcpy(&u, &x, 4);
    u32(u);
}

void ByteWriter::f64(double x) {
    uint64_t u;
    std::memcpy(&u, &x, 8);
    u64(u);
}

void ByteWriter::bytes(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
}

void ByteWriter::str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
}

void ByteReader::need(size_t n) const {
    if (pos_ + n > n_) throw std::runtime_error("truncated input: read past end of buffer");
}

uint8_t ByteReader::u8() {
    need(1);
    return p_[pos_++];
}

uint16_t ByteReader::u16() {
    need(2);
    uint16_t x = static_cast<uint16_t>(p_[pos_] | (p_[pos_ + 1] << 8));
    pos_ += 2;
    return x;
}

uint32_t ByteReader::u32() {
    need(4);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return x;
}

uint64_t ByteReader::u64() {
    need(8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return x;
}

float ByteReader::f32() {
    uint32_t u = u32();
    float x;
    std::memcpy(&x, &u, 4);
    return x;
}

double ByteReader::f64() {
    uint64_t u = u64();
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

void ByteReader::bytes(void* out, size_t n) {
    need(n);
    std::memcpy(out, p_ + pos_, n);
    pos_ += n;
}

std::string ByteReader::str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), n);
    pos_ += n;
    return s;
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
    return std::string(buf);
}

void atomic_write_file(const std::filesystem::path& path, const void* data, size_t n) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_file(const std::filesystem::path& path, const std::vector<uint8_t>& data) {
    atomic_write_file(path, data.data(), data.size());
}

void atomic_write_file(const std::filesystem::path& path, const std::string& text) {
    atomic_write_file(path, text.data(), text.size());
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::streamsize n = f.tellg();
    f.seekg(0);
    std::vector<uint8_t> buf(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw std::runtime_error("read failed: " + path.string());
    return buf;
}

}  // namespace amc

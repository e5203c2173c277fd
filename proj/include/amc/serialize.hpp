#pragma once

// Little-endian binary encoding shared by every on-disk format (datasets,
// checkpoints, PCA models, subsample plans). All multi-byte values are
// written least-significant byte first regardless of host endianness.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace amc {

class ByteWriter {
public:
    void u8(uint8_t x) { buf_.push_back(x); }
    void i8(int8_t x) { buf_.push_back(static_cast<uint8_t>(x)); }
    void u16(uint16_t x);
    void u32(uint32_t x);
    void u64(uint64_t x);
    void i32(int32_t x) { u32(static_cast<uint32_t>(x)); }
    void i64(int64_t x) { u64(static_cast<uint64_t>(x)); }
    void f32(float x);
    void f64(double x);
    void bytes(const void* p, size_t n);
    void str(const std::string& s);  // u32 length + raw bytes

    const std::vector<uint8_t>& data() const { return buf_; }
    size_t size() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
};

// Reader over an in-memory byte span. Throws std::runtime_error on
// out-of-bounds reads so truncated files fail loudly.
class ByteReader {
public:
    ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : p_(v.data()), n_(v.size()) {}

    uint8_t u8();
    int8_t i8() { return static_cast<int8_t>(u8()); }
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    int32_t i32() { return static_cast<int32_t>(u32()); }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    float f32();
    double f64();
    void bytes(void* out, size_t n);
    std::string str();

    size_t remaining() const { return n_ - pos_; }
    size_t pos() const { return pos_; }

private:
    void need(size_t n) const;
    const uint8_t* p_;
    size_t n_;
    size_t pos_ = 0;
};

// FNV-1a 64-bit hash; used as the payload checksum in all binary formats
// and as the config digest.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(uint64_t x);

// Whole-file IO. atomic_write_file writes to "<path>.tmp" then renames, so
// a crash never leaves a half-written report or dataset behind.
void atomic_write_file(const std::filesystem::path& path, const void* data, size_t n);
void atomic_write_file(const std::filesystem::path& path, const std::vector<uint8_t>& data);
void atomic_write_file(const std::filesystem::path& path, const std::string& text);
std::vector<uint8_t> read_file(const std::filesystem::path& path);

}  // namespace amc

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "citerec/error.hpp"

namespace citerec {

// ---------------------------------------------------------------------------
// Hashing

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t len,
                                   std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    return fnv1a64_bytes(s.data(), s.size(), h);
}

/// splitmix64: tiny, well-mixed 64-bit hash; used to derive per-counter
/// random streams without carrying generator state around.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string to_hex(std::uint64_t v);  // 16 lowercase hex digits

// ---------------------------------------------------------------------------
// Little-endian buffer serialization

struct BufferUnderflowError : Error {
    using Error::Error;
};

/// Appends little-endian primitives to a byte string.
class BufWriter {
  public:
    explicit BufWriter(std::string& out) : out_(out) {}

    void bytes(const void* p, std::size_t n) {
        out_.append(static_cast<const char*>(p), n);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    /// Unsigned LEB128.
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            u8(static_cast<std::uint8_t>(v) | 0x80);
            v >>= 7;
        }
        u8(static_cast<std::uint8_t>(v));
    }
    /// u16 length prefix + raw bytes.
    void str16(std::string_view s) {
        if (s.size() > 0xffff) throw Error("string too long for u16 length prefix");
        u16(static_cast<std::uint16_t>(s.size()));
        bytes(s.data(), s.size());
    }

  private:
    template <typename T>
    void put_le(T v) {
        unsigned char b[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i)
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, sizeof(T));
    }
    std::string& out_;
};

/// Reads little-endian primitives from a byte span; throws
/// BufferUnderflowError when the input is shorter than requested.
class BufReader {
  public:
    explicit BufReader(std::span<const char> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        while (true) {
            std::uint8_t b = u8();
            if (shift >= 64 || (shift == 63 && (b & 0x7e)))
                throw BufferUnderflowError("varint overflows 64 bits");
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
        }
    }
    std::string str16() {
        std::uint16_t n = u16();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

  private:
    void need(std::size_t n) const {
        if (remaining() < n) throw BufferUnderflowError("unexpected end of buffer");
    }
    template <typename T>
    T get_le() {
        unsigned char b[sizeof(T)];
        bytes(b, sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
        return v;
    }
    std::span<const char> data_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Files

std::string read_file_bytes(const std::filesystem::path& path);

/// Writes via a temporary sibling file and renames it into place, so readers
/// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// fnv1a64 of the file contents as 16 hex chars. Used for run manifests and
/// determinism checks.
std::string file_digest_hex(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Misc

double monotonic_seconds();

/// Runs fn(i) for i in [0, n) across `threads` workers (0 = hardware
/// concurrency). Rethrows the first exception raised by any worker.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace citerec

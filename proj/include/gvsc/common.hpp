#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gvsc {

// Scale fields are floored here to keep ratios and PMF evaluations finite.
inline constexpr double kThetaFloor = 1e-3;
// Lower clamp for scaling coefficients beta.
inline constexpr double kBetaEps = 1e-6;
// Log2-domain grid step used when transmitting scale fields.
inline constexpr double kScaleGridStep = 0.25;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or truncated bitstreams and containers.
struct DecodeError : Error {
    using Error::Error;
};

// Constraint cannot be met (e.g. zero-capacity channel with nonzero rate).
struct InfeasibleError : Error {
    using Error::Error;
};

struct Shape3 {
    uint32_t w = 0;
    uint32_t h = 0;
    uint32_t c = 0;

    size_t size() const { return size_t(w) * h * c; }
    bool operator==(const Shape3&) const = default;
};

inline std::string to_string(const Shape3& s) {
    return std::to_string(s.w) + "x" + std::to_string(s.h) + "x" + std::to_string(s.c);
}

// ---------------------------------------------------------------------------
// Deterministic seeding / sampling helpers. All randomness in the library
// flows through these so that identical seeds give identical results.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Mixes a base seed with stream identifiers (image index, SNR cell, ...).
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = base;
    uint64_t out = splitmix64(s);
    s ^= a * 0xA24BAED4963EE407ull;
    out ^= splitmix64(s);
    s ^= b * 0x9FB21C651E98DF25ull;
    out ^= splitmix64(s);
    s ^= c * 0xC2B2AE3D27D4EB4Full;
    out ^= splitmix64(s);
    return out;
}

// Small xoshiro-free generator: splitmix stream, explicitly specified so
// sampled values are reproducible independent of the standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1] (never zero; safe for log()).
    double next_double_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Uniform in [-1, 1].
    double next_symmetric() { return 2.0 * next_double() - 1.0; }

    // Standard normal via Box-Muller; one value per call, cached pair.
    double next_normal();

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Little-endian byte packing used by every on-disk format.
// ---------------------------------------------------------------------------

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void f32(float v);
    void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void str(const std::string& s) { bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size()); }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* p, size_t n) : p_(p), end_(p + n) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : ByteReader(v.data(), v.size()) {}

    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    int32_t i32() { return static_cast<int32_t>(u32()); }
    float f32();
    std::vector<uint8_t> bytes(size_t n);
    std::string str(size_t n);
    size_t remaining() const { return size_t(end_ - p_); }

private:
    void need(size_t n) const {
        if (remaining() < n) throw DecodeError("unexpected end of data");
    }
    const uint8_t* p_;
    const uint8_t* end_;
};

// CRC-32 (IEEE, reflected). Used to guard payload sections.
uint32_t crc32(const uint8_t* data, size_t n);
inline uint32_t crc32(const std::vector<uint8_t>& v) { return crc32(v.data(), v.size()); }

}  // namespace gvsc

#include "gvsc/common.hpp"

#include <array>
#include <cmath>
#include <cstring>

namespace gvsc {

double Rng::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = next_double_pos();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

void ByteWriter::u16(uint16_t v) {
    buf_.push_back(uint8_t(v & 0xFF));
    buf_.push_back(uint8_t(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t((v >> (8 * i)) & 0xFF));
}

void ByteWriter::f32(float v) {
    uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    u32(bits);
}

uint8_t ByteReader::u8() {
    need(1);
    return *p_++;
}

uint16_t ByteReader::u16() {
    need(2);
    uint16_t v = uint16_t(p_[0]) | uint16_t(p_[1]) << 8;
    p_ += 2;
    return v;
}

uint32_t ByteReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p_[i]) << (8 * i);
    p_ += 4;
    return v;
}

float ByteReader::f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::vector<uint8_t> ByteReader::bytes(size_t n) {
    need(n);
    std::vector<uint8_t> out(p_, p_ + n);
    p_ += n;
    return out;
}

std::string ByteReader::str(size_t n) {
    need(n);
    std::string out(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return out;
}

namespace {

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t n) {
    static const auto table = make_crc_table();
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace gvsc

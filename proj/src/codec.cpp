#include "gvsc/codec.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <stdexcept>

namespace gvsc {

int32_t quantize_value(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("cannot quantize non-finite value");
    const long long k = std::llround(x);  // rounds halves away from zero
    if (k < INT32_MIN || k > INT32_MAX) throw std::invalid_argument("quantized value overflows");
    return int32_t(k);
}

QuantizedTensor quantize(const FeatureTensor& features) {
    QuantizedTensor q(features.shape());
    for (size_t n = 0; n < features.size(); ++n) q[n] = quantize_value(features[n]);
    return q;
}

double gaussian_cdf(double x, double theta) {
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
    return 0.5 * std::erfc(-x / (theta * M_SQRT2));
}

double conditional_pmf(int64_t k, double theta) {
    if (!(theta >= kThetaFloor)) throw std::invalid_argument("theta below floor");
    // Evaluate through the upper tail of |k| for precision.
    const double a = (std::abs(double(k)) - 0.5) / (theta * M_SQRT2);
    const double b = (std::abs(double(k)) + 0.5) / (theta * M_SQRT2);
    double p;
    if (k == 0) {
        p = std::erf(b);
    } else {
        p = 0.5 * (std::erfc(a) - std::erfc(b));
    }
    return std::clamp(p, kPmfFloor, 1.0 - kPmfFloor);
}

// ---------------------------------------------------------------------------
// Range coder.
// ---------------------------------------------------------------------------

namespace {
constexpr uint64_t kRenormBound = 1ull << 56;
constexpr uint64_t kMaxTotal = 1ull << 48;
}  // namespace

void RangeEncoder::shift_low() {
    const uint64_t lo64 = uint64_t(low_);
    const uint32_t carry = uint32_t(low_ >> 64);
    if (lo64 < 0xFF00000000000000ull || carry) {
        if (cache_ >= 0) out_.push_back(uint8_t(cache_ + carry));
        for (; pending_ > 0; --pending_) out_.push_back(uint8_t(0xFF + carry));
        cache_ = int(uint8_t(lo64 >> 56));
    } else {
        ++pending_;
    }
    low_ = (unsigned __int128)(lo64 << 8);
}

void RangeEncoder::encode(uint64_t cum_lo, uint64_t cum_hi, uint64_t total) {
    if (finished_) throw std::logic_error("encoder already finished");
    if (!(cum_lo < cum_hi && cum_hi <= total && total <= kMaxTotal))
        throw std::invalid_argument("invalid coding interval");
    const uint64_t r = range_ / total;
    low_ += (unsigned __int128)r * cum_lo;
    range_ = r * (cum_hi - cum_lo);
    while (range_ < kRenormBound) {
        shift_low();
        range_ <<= 8;
    }
}

void RangeEncoder::encode_raw_bits(uint32_t value, int nbits) {
    for (int i = nbits - 1; i >= 0; --i) {
        const uint64_t bit = (value >> i) & 1;
        encode(bit, bit + 1, 2);
    }
}

std::vector<uint8_t> RangeEncoder::finish() {
    if (finished_) throw std::logic_error("encoder already finished");
    finished_ = true;
    // Round low up to a multiple of 2^56 inside [low, low + range); the
    // decoder reads zeros past the end of the stream, so a single byte
    // pins the final value.
    const unsigned __int128 step = (unsigned __int128)1 << 56;
    const unsigned __int128 rem = low_ & (step - 1);
    if (rem != 0) low_ += step - rem;
    shift_low();
    if (cache_ >= 0) out_.push_back(uint8_t(cache_));
    for (; pending_ > 0; --pending_) out_.push_back(0xFF);
    return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t n) : data_(data), size_(n) {
    for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

uint64_t RangeDecoder::decode_target(uint64_t total) {
    if (!(total >= 1 && total <= kMaxTotal)) throw std::invalid_argument("invalid total");
    const uint64_t r = range_ / total;
    return std::min(code_ / r, total - 1);
}

void RangeDecoder::consume(uint64_t cum_lo, uint64_t cum_hi, uint64_t total) {
    if (!(cum_lo < cum_hi && cum_hi <= total && total <= kMaxTotal))
        throw std::invalid_argument("invalid coding interval");
    const uint64_t r = range_ / total;
    code_ -= r * cum_lo;
    range_ = r * (cum_hi - cum_lo);
    while (range_ < kRenormBound) {
        code_ = (code_ << 8) | next_byte();
        range_ <<= 8;
    }
}

uint32_t RangeDecoder::decode_raw_bits(int nbits) {
    uint32_t v = 0;
    for (int i = 0; i < nbits; ++i) {
        const uint64_t bit = decode_target(2);
        consume(bit, bit + 1, 2);
        v = (v << 1) | uint32_t(bit);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Conditional Gaussian symbol model. The alphabet is [-K, K] with
// K = ceil(8 theta) plus an escape region for outliers; integer cumulative
// counts give every symbol at least one count out of 2^30, realizing the
// 2^-30 probability floor.
// ---------------------------------------------------------------------------

namespace {

struct GaussianSymbolModel {
    static constexpr uint64_t kTotal = 1ull << 30;
    static constexpr uint64_t kEscape = 1024;

    double theta;
    int64_t support;       // K
    uint64_t weight_scale; // counts distributed by the continuous CDF
    double cdf_lo;         // CDF at -K - 0.5
    double norm;           // CDF mass inside the support

    explicit GaussianSymbolModel(double th) : theta(th) {
        if (!(theta >= kThetaFloor)) throw std::invalid_argument("theta below floor");
        support = int64_t(std::ceil(8.0 * theta));
        if (support < 1) support = 1;
        if (support > (int64_t(1) << 24))
            throw std::invalid_argument("scale too large for the symbol model");
        const uint64_t symbols = uint64_t(2 * support + 1);
        weight_scale = kTotal - kEscape - symbols;
        cdf_lo = gaussian_cdf(-double(support) - 0.5, theta);
        norm = gaussian_cdf(double(support) + 0.5, theta) - cdf_lo;
    }

    // Cumulative count below symbol k; valid for k in [-K, K+1].
    uint64_t cum(int64_t k) const {
        if (k == -support) return kEscape;
        if (k == support + 1) return kTotal;
        const double w = (gaussian_cdf(double(k) - 0.5, theta) - cdf_lo) / norm;
        return kEscape + uint64_t(w * double(weight_scale)) + uint64_t(k + support);
    }

    bool in_support(int64_t k) const { return k >= -support && k <= support; }
};

}  // namespace

FeatureBitstream encode_features(const QuantizedTensor& q, const ScaleField& theta,
                                 const FilterSet& set) {
    require_same_shape(q.shape(), theta.shape(), "encode_features");
    const Shape3 s = q.shape();
    if (set.spatial.width() != s.w || set.spatial.height() != s.h || set.channels != s.c)
        throw std::invalid_argument("filter set does not match tensor dims");

    RangeEncoder enc;
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            if (!set.contains(i, j)) continue;
            for (uint32_t c = 0; c < s.c; ++c) {
                const int64_t k = q.at(i, j, c);
                const GaussianSymbolModel model(theta.at(i, j, c));
                if (model.in_support(k)) {
                    enc.encode(model.cum(k), model.cum(k + 1), GaussianSymbolModel::kTotal);
                } else {
                    enc.encode(0, GaussianSymbolModel::kEscape, GaussianSymbolModel::kTotal);
                    enc.encode_raw_bits(uint32_t(int32_t(k)), 32);
                }
            }
        }
    FeatureBitstream out;
    out.bytes = enc.finish();
    out.bit_count = out.bytes.size() * 8;
    out.crc = crc32(out.bytes);
    return out;
}

QuantizedTensor decode_features(const FeatureBitstream& bits, const ScaleField& theta,
                                const FilterSet& set) {
    const Shape3 s = theta.shape();
    if (set.spatial.width() != s.w || set.spatial.height() != s.h || set.channels != s.c)
        throw std::invalid_argument("filter set does not match tensor dims");

    if (crc32(bits.bytes) != bits.crc)
        throw DecodeError("feature stream corrupt: CRC mismatch");

    QuantizedTensor q(s);  // zeros outside the set
    RangeDecoder dec(bits.bytes);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            if (!set.contains(i, j)) continue;
            for (uint32_t c = 0; c < s.c; ++c) {
                const GaussianSymbolModel model(theta.at(i, j, c));
                const uint64_t t = dec.decode_target(GaussianSymbolModel::kTotal);
                if (t < GaussianSymbolModel::kEscape) {
                    dec.consume(0, GaussianSymbolModel::kEscape, GaussianSymbolModel::kTotal);
                    q.at(i, j, c) = int32_t(dec.decode_raw_bits(32));
                } else {
                    int64_t lo = -model.support, hi = model.support;
                    while (lo < hi) {
                        const int64_t mid = lo + (hi - lo + 1) / 2;
                        if (model.cum(mid) <= t)
                            lo = mid;
                        else
                            hi = mid - 1;
                    }
                    dec.consume(model.cum(lo), model.cum(lo + 1), GaussianSymbolModel::kTotal);
                    q.at(i, j, c) = int32_t(lo);
                }
            }
        }
    return q;
}

// ---------------------------------------------------------------------------
// Side information: log2-grid indices of the scale field under an adaptive
// zero-order frequency model.
// ---------------------------------------------------------------------------

namespace {

long grid_index(double theta) {
    if (!(theta > 0) || !std::isfinite(theta))
        throw std::invalid_argument("scale must be positive and finite");
    static const long idx_floor = long(std::ceil(std::log2(kThetaFloor) / kScaleGridStep - 1e-9));
    const long idx = std::lround(std::log2(theta) / kScaleGridStep);
    return std::max(idx, idx_floor);
}

double grid_value(long idx) { return std::exp2(double(idx) * kScaleGridStep); }

struct AdaptiveModel {
    std::vector<uint64_t> freq;
    uint64_t total;

    explicit AdaptiveModel(size_t alphabet) : freq(alphabet, 1), total(alphabet) {}

    void encode(RangeEncoder& enc, size_t sym) {
        uint64_t lo = 0;
        for (size_t s = 0; s < sym; ++s) lo += freq[s];
        enc.encode(lo, lo + freq[sym], total);
        ++freq[sym];
        ++total;
    }

    size_t decode(RangeDecoder& dec) {
        const uint64_t t = dec.decode_target(total);
        uint64_t lo = 0;
        size_t sym = 0;
        while (lo + freq[sym] <= t) lo += freq[sym++];
        dec.consume(lo, lo + freq[sym], total);
        ++freq[sym];
        ++total;
        return sym;
    }
};

constexpr size_t kMaxGridAlphabet = 4096;

}  // namespace

double grid_quantize_value(double theta) { return grid_value(grid_index(theta)); }

ScaleField grid_quantize_scale(const ScaleField& theta) {
    ScaleField out(theta.shape());
    for (size_t n = 0; n < theta.size(); ++n) out[n] = grid_quantize_value(theta[n]);
    return out;
}

SideInfoBitstream encode_side_info(const ScaleField& theta) {
    const Shape3 s = theta.shape();
    if (s.size() == 0) throw std::invalid_argument("empty scale field");

    std::vector<long> idx(theta.size());
    long lo = LONG_MAX, hi = LONG_MIN;
    for (size_t n = 0; n < theta.size(); ++n) {
        idx[n] = grid_index(theta[n]);
        lo = std::min(lo, idx[n]);
        hi = std::max(hi, idx[n]);
    }
    const size_t alphabet = size_t(hi - lo + 1);
    if (alphabet > kMaxGridAlphabet)
        throw std::invalid_argument("scale field spans too many grid steps");

    ByteWriter header;
    header.u32(s.w);
    header.u32(s.h);
    header.u32(s.c);
    header.i32(int32_t(lo));
    header.i32(int32_t(hi));

    RangeEncoder enc;
    AdaptiveModel model(alphabet);
    for (long v : idx) model.encode(enc, size_t(v - lo));
    const auto body = enc.finish();

    SideInfoBitstream out;
    out.bytes = header.take();
    out.bytes.insert(out.bytes.end(), body.begin(), body.end());
    out.bit_count = out.bytes.size() * 8;
    out.crc = crc32(out.bytes);
    return out;
}

ScaleField decode_side_info(const SideInfoBitstream& bits) {
    if (crc32(bits.bytes) != bits.crc)
        throw DecodeError("side info corrupt: CRC mismatch");
    ByteReader rd(bits.bytes);
    Shape3 s{rd.u32(), rd.u32(), rd.u32()};
    const int32_t lo = rd.i32();
    const int32_t hi = rd.i32();
    if (s.w == 0 || s.h == 0 || s.c == 0 || s.w > 0xFFFF || s.h > 0xFFFF || s.c > 0xFFFF ||
        s.size() > (size_t(1) << 28))
        throw DecodeError("side info corrupt: bad dims");
    if (hi < lo || size_t(int64_t(hi) - lo + 1) > kMaxGridAlphabet)
        throw DecodeError("side info corrupt: bad grid range");

    const auto body = rd.bytes(rd.remaining());
    RangeDecoder dec(body);
    AdaptiveModel model(size_t(int64_t(hi) - lo + 1));
    ScaleField theta(s);
    for (size_t n = 0; n < theta.size(); ++n)
        theta[n] = grid_value(lo + long(model.decode(dec)));
    return theta;
}

ScaleField transmission_scale_field(const FeatureTensor& features, const ExtractorConfig& cfg) {
    cfg.validate();
    const uint32_t k = cfg.scale_window;
    const ScaleField tiles =
        grid_quantize_scale(downsample_scale_tiles(estimate_scale_field(features, k), k));
    return replicate_scale_tiles(tiles, features.shape(), k);
}

RateReport measure_rate(const QuantizedTensor& q, const ScaleField& theta, const FilterSet& set,
                        bool include_mask, const ScaleField* side_field) {
    RateReport report;
    const auto fb = encode_features(q, theta, set);
    report.feature_bits = double(fb.bit_count);
    const auto sb = encode_side_info(side_field ? *side_field : theta);
    report.side_bits = double(sb.bit_count);
    const auto mb = encode_mask(set);
    report.mask_bits = double(mb.bit_count);

    const Shape3 s = q.shape();
    double ideal = 0;
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            if (!set.contains(i, j)) continue;
            for (uint32_t c = 0; c < s.c; ++c)
                ideal -= std::log2(conditional_pmf(q.at(i, j, c), theta.at(i, j, c)));
        }
    report.ideal_feature_bits = ideal;
    report.total_bits =
        report.feature_bits + report.side_bits + (include_mask ? report.mask_bits : 0.0);
    return report;
}

}  // namespace gvsc

#include "gvsc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvsc {

void ClassModel::validate() const {
    if (labels.empty()) throw std::invalid_argument("class model has no classes");
    if (weights.size() != labels.size())
        throw std::invalid_argument("weight vector count must equal label count");
    const uint32_t cf = feature_maps.shape().c;
    for (const auto& w : weights)
        if (w.size() != cf)
            throw std::invalid_argument("weight length must match feature map count");
}

std::vector<ClassScore> class_scores(const ClassModel& model) {
    model.validate();
    const Shape3 s = model.feature_maps.shape();

    std::vector<double> map_sums(s.c, 0.0);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j)
            for (uint32_t c = 0; c < s.c; ++c) map_sums[c] += model.feature_maps.at(i, j, c);

    std::vector<ClassScore> out(model.labels.size());
    double max_s = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < out.size(); ++k) {
        double sk = 0;
        for (uint32_t c = 0; c < s.c; ++c) sk += model.weights[k][c] * map_sums[c];
        out[k].label = model.labels[k];
        out[k].score = sk;
        max_s = std::max(max_s, sk);
    }
    double z = 0;
    for (auto& cs : out) z += std::exp(cs.score - max_s);
    for (auto& cs : out) cs.prob = std::exp(cs.score - max_s) / z;
    return out;
}

Matrix class_importance(const ClassModel& model, size_t k) {
    model.validate();
    if (k >= model.labels.size()) throw std::out_of_range("class index out of range");
    const Shape3 s = model.feature_maps.shape();
    Matrix imp(s.w, s.h);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            double acc = 0;
            for (uint32_t c = 0; c < s.c; ++c)
                acc += model.weights[k][c] * model.feature_maps.at(i, j, c);
            imp.at(i, j) = acc;
        }
    return imp;
}

namespace {

Matrix min_max_normalize(const Matrix& raw) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t n = 0; n < raw.size(); ++n) {
        if (!std::isfinite(raw[n])) throw std::invalid_argument("importance must be finite");
        lo = std::min(lo, raw[n]);
        hi = std::max(hi, raw[n]);
    }
    Matrix out(raw.width(), raw.height());
    if (hi == lo) {
        // Degenerate map: neutral importance rather than all-or-nothing.
        for (size_t n = 0; n < out.size(); ++n) out[n] = 0.5;
        return out;
    }
    for (size_t n = 0; n < out.size(); ++n) out[n] = (raw[n] - lo) / (hi - lo);
    return out;
}

// Corner-aligned bilinear resampling.
Matrix bilinear_resize(const Matrix& src, uint32_t tw, uint32_t th) {
    if (tw == 0 || th == 0) throw std::invalid_argument("target dims must be positive");
    Matrix out(tw, th);
    const uint32_t sw = src.width(), sh = src.height();
    const double fx = tw > 1 ? double(sw - 1) / (tw - 1) : 0.0;
    const double fy = th > 1 ? double(sh - 1) / (th - 1) : 0.0;
    for (uint32_t i = 0; i < tw; ++i) {
        const double x = i * fx;
        const uint32_t x0 = std::min(uint32_t(x), sw - 1);
        const uint32_t x1 = std::min(x0 + 1, sw - 1);
        const double ax = x - x0;
        for (uint32_t j = 0; j < th; ++j) {
            const double y = j * fy;
            const uint32_t y0 = std::min(uint32_t(y), sh - 1);
            const uint32_t y1 = std::min(y0 + 1, sh - 1);
            const double ay = y - y0;
            out.at(i, j) = (1 - ax) * (1 - ay) * src.at(x0, y0) + (1 - ax) * ay * src.at(x0, y1) +
                           ax * (1 - ay) * src.at(x1, y0) + ax * ay * src.at(x1, y1);
        }
    }
    return out;
}

}  // namespace

Matrix normalize_upsample(const Matrix& raw, uint32_t target_w, uint32_t target_h) {
    return bilinear_resize(min_max_normalize(raw), target_w, target_h);
}

std::pair<Matrix, std::string> select_importance(const ClassModel& model, uint32_t target_w,
                                                 uint32_t target_h) {
    const auto scores = class_scores(model);
    size_t best = 0;
    for (size_t k = 1; k < scores.size(); ++k)
        if (scores[k].prob > scores[best].prob) best = k;
    return {normalize_upsample(class_importance(model, best), target_w, target_h),
            scores[best].label};
}

Matrix saliency_surrogate(const FeatureTensor& features) {
    const Shape3 s = features.shape();
    Matrix energy(s.w, s.h);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            double acc = 0;
            for (uint32_t c = 0; c < s.c; ++c) {
                const double v = features.at(i, j, c);
                acc += v * v;
            }
            energy.at(i, j) = acc;
        }
    return min_max_normalize(energy);
}

FilterSet FilterSet::full(uint32_t w, uint32_t h, uint32_t channels) {
    return {MaskMatrix(w, h, 1), channels};
}

FilterSet FilterSet::empty(uint32_t w, uint32_t h, uint32_t channels) {
    return {MaskMatrix(w, h, 0), channels};
}

FilterSet build_filter_set(const Matrix& importance, double alpha, uint32_t channels) {
    if (!(alpha >= 0)) throw std::invalid_argument("alpha must be nonnegative");
    if (channels == 0) throw std::invalid_argument("channels must be positive");
    FilterSet set{MaskMatrix(importance.width(), importance.height()), channels};
    for (size_t n = 0; n < importance.size(); ++n) set.spatial[n] = importance[n] >= alpha ? 1 : 0;
    return set;
}

FeatureTensor apply_filter(const FeatureTensor& features, const FilterSet& set) {
    const Shape3 s = features.shape();
    if (set.spatial.width() != s.w || set.spatial.height() != s.h || set.channels != s.c)
        throw std::invalid_argument("filter set does not match feature dims");
    FeatureTensor out(s);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            if (!set.contains(i, j)) continue;
            for (uint32_t c = 0; c < s.c; ++c) out.at(i, j, c) = features.at(i, j, c);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Mask run-length coding. MSB-first bit stream: u16 width, u16 height,
// 1 bit for the value of the first run, then Elias-gamma run lengths
// covering all W*H positions in row-major (i, j) order.
// ---------------------------------------------------------------------------

namespace {

class BitWriter {
public:
    void bit(uint32_t b) {
        if (shift_ == 0) {
            bytes_.push_back(0);
            shift_ = 8;
        }
        --shift_;
        if (b) bytes_.back() |= uint8_t(1u << shift_);
        ++count_;
    }
    void bits(uint64_t v, int n) {
        for (int i = n - 1; i >= 0; --i) bit(uint32_t((v >> i) & 1));
    }
    void gamma(uint64_t n) {
        int len = 0;
        while ((n >> len) > 1) ++len;
        for (int i = 0; i < len; ++i) bit(0);
        bits(n, len + 1);
    }
    size_t bit_count() const { return count_; }
    std::vector<uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<uint8_t> bytes_;
    int shift_ = 0;
    size_t count_ = 0;
};

class BitReader {
public:
    BitReader(const uint8_t* p, size_t n) : p_(p), nbits_(n * 8) {}
    uint32_t bit() {
        if (pos_ >= nbits_) throw DecodeError("mask stream truncated");
        const uint32_t b = (p_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1;
        ++pos_;
        return b;
    }
    uint64_t bits(int n) {
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 1) | bit();
        return v;
    }
    uint64_t gamma() {
        int len = 0;
        while (bit() == 0)
            if (++len > 40) throw DecodeError("mask stream corrupt: gamma prefix too long");
        uint64_t v = 1;
        for (int i = 0; i < len; ++i) v = (v << 1) | bit();
        return v;
    }
    size_t pos() const { return pos_; }

private:
    const uint8_t* p_;
    size_t nbits_;
    size_t pos_ = 0;
};

}  // namespace

MaskBitstream encode_mask(const FilterSet& set) {
    const uint32_t w = set.spatial.width(), h = set.spatial.height();
    if (w == 0 || h == 0) throw std::invalid_argument("empty mask dims");
    if (w > 0xFFFF || h > 0xFFFF) throw std::invalid_argument("mask dims exceed 16-bit header");

    BitWriter bw;
    bw.bits(w, 16);
    bw.bits(h, 16);
    const size_t total = size_t(w) * h;
    const uint8_t first = set.spatial[0] ? 1 : 0;
    bw.bit(first);
    uint8_t cur = first;
    uint64_t run = 0;
    for (size_t n = 0; n < total; ++n) {
        const uint8_t b = set.spatial[n] ? 1 : 0;
        if (b == cur) {
            ++run;
        } else {
            bw.gamma(run);
            cur = b;
            run = 1;
        }
    }
    bw.gamma(run);
    MaskBitstream out;
    out.bit_count = bw.bit_count();
    out.bytes = bw.take();
    out.crc = crc32(out.bytes);
    return out;
}

FilterSet decode_mask(const MaskBitstream& bits, uint32_t channels) {
    if (crc32(bits.bytes) != bits.crc)
        throw DecodeError("mask stream corrupt: CRC mismatch");
    BitReader br(bits.bytes.data(), bits.bytes.size());
    const uint32_t w = uint32_t(br.bits(16));
    const uint32_t h = uint32_t(br.bits(16));
    if (w == 0 || h == 0) throw DecodeError("mask stream corrupt: zero dims");
    FilterSet set{MaskMatrix(w, h), channels};
    uint8_t cur = uint8_t(br.bit());
    const size_t total = size_t(w) * h;
    size_t n = 0;
    while (n < total) {
        uint64_t run = br.gamma();
        if (run > total - n) throw DecodeError("mask stream corrupt: run exceeds mask size");
        for (uint64_t k = 0; k < run; ++k) set.spatial[n++] = cur;
        cur = 1 - cur;
    }
    return set;
}

}  // namespace gvsc

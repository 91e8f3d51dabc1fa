#pragma once

#include <cstdint>
#include <vector>

#include "gvsc/filter.hpp"
#include "gvsc/gsm.hpp"
#include "gvsc/tensor.hpp"

namespace gvsc {

// ---------------------------------------------------------------------------
// Quantization and the conditional Gaussian symbol model.
// ---------------------------------------------------------------------------

// Unit-step scalar quantizer, ties rounded away from zero.
int32_t quantize_value(double x);
QuantizedTensor quantize(const FeatureTensor& features);

// CDF of N(0, theta^2) at x.
double gaussian_cdf(double x, double theta);

// P(k) = Phi((k+0.5)/theta) - Phi((k-0.5)/theta), clamped into
// [2^-30, 1 - 2^-30] so code lengths stay finite.
double conditional_pmf(int64_t k, double theta);

inline constexpr double kPmfFloor = 0x1.0p-30;

// ---------------------------------------------------------------------------
// Range coder: 64-bit range, byte-wise renormalization with carry
// propagation, byte-aligned output. Cumulative totals up to 2^30 are
// supported, which realizes the 2^-30 probability floor exactly.
// ---------------------------------------------------------------------------

class RangeEncoder {
public:
    // Encode the interval [cum_lo, cum_hi) out of [0, total).
    void encode(uint64_t cum_lo, uint64_t cum_hi, uint64_t total);
    void encode_raw_bits(uint32_t value, int nbits);

    // Terminates the stream; at most one byte beyond the information content.
    std::vector<uint8_t> finish();

private:
    void shift_low();

    unsigned __int128 low_ = 0;
    uint64_t range_ = UINT64_MAX;
    int cache_ = -1;  // byte awaiting possible carry; -1 before first byte
    uint64_t pending_ = 0;
    std::vector<uint8_t> out_;
    bool finished_ = false;
};

class RangeDecoder {
public:
    RangeDecoder(const uint8_t* data, size_t n);
    explicit RangeDecoder(const std::vector<uint8_t>& v) : RangeDecoder(v.data(), v.size()) {}

    uint64_t decode_target(uint64_t total);
    void consume(uint64_t cum_lo, uint64_t cum_hi, uint64_t total);
    uint32_t decode_raw_bits(int nbits);

private:
    uint8_t next_byte() { return pos_ < size_ ? data_[pos_++] : 0; }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    uint64_t code_ = 0;
    uint64_t range_ = UINT64_MAX;
};

// ---------------------------------------------------------------------------
// Feature and side-information codecs.
// ---------------------------------------------------------------------------

// Coded streams carry the CRC computed at encode time; decoders verify it
// before trusting the bytes (an arithmetic decoder would otherwise turn
// corruption into silent garbage).
struct FeatureBitstream {
    std::vector<uint8_t> bytes;
    size_t bit_count = 0;  // B_y
    uint32_t crc = 0;
};

struct SideInfoBitstream {
    std::vector<uint8_t> bytes;
    size_t bit_count = 0;  // B_s
    uint32_t crc = 0;
};

// Arithmetic-codes the selected elements in row-major (i, j, c) order under
// the conditional Gaussian model with per-element scale theta. Values beyond
// the modeled support escape to a 32-bit raw encoding.
FeatureBitstream encode_features(const QuantizedTensor& q, const ScaleField& theta,
                                 const FilterSet& set);
QuantizedTensor decode_features(const FeatureBitstream& bits, const ScaleField& theta,
                                const FilterSet& set);

// Snap a scale to the transmission grid 2^(0.25 * k), k integer, with the
// index floored so the result never drops below kThetaFloor.
double grid_quantize_value(double theta);
ScaleField grid_quantize_scale(const ScaleField& theta);

// Codes grid indices of log2(theta) with an adaptive zero-order frequency
// model. Roundtrip reproduces the grid-quantized field exactly.
SideInfoBitstream encode_side_info(const ScaleField& theta);
ScaleField decode_side_info(const SideInfoBitstream& bits);

// Reference scale field as the receiver sees it: windowed RMS estimate,
// tiled, grid-quantized, and replicated back to the feature grid. The
// coding scale is derived from it via apply_coder_profile, identically on
// both sides.
ScaleField transmission_scale_field(const FeatureTensor& features, const ExtractorConfig& cfg);

struct RateReport {
    double feature_bits = 0;    // B_y, actual
    double side_bits = 0;       // B_s, actual
    double mask_bits = 0;       // B_P, actual
    double ideal_feature_bits = 0;  // sum of -log2 P over the coded set
    double total_bits = 0;      // B_y + B_s (+ B_P when include_mask)
};

// Measures actual coded lengths against the ideal information content.
// Features are coded under theta exactly as given; side_field, when given,
// is the (possibly downsampled) field actually transmitted as side
// information in place of theta.
RateReport measure_rate(const QuantizedTensor& q, const ScaleField& theta, const FilterSet& set,
                        bool include_mask = false, const ScaleField* side_field = nullptr);

}  // namespace gvsc

#include "doctest.h"

#include <cmath>

#include "gvsc/codec.hpp"
#include "oracles.hpp"

using namespace gvsc;

namespace {

ScaleField random_scale(uint32_t w, uint32_t h, uint32_t c, uint64_t seed, double lo = 0.2,
                        double hi = 6.0) {
    ScaleField theta(w, h, c);
    Rng rng(seed);
    for (size_t n = 0; n < theta.size(); ++n) theta[n] = lo + (hi - lo) * rng.next_double();
    return theta;
}

FilterSet random_set(uint32_t w, uint32_t h, uint32_t c, uint64_t seed) {
    FilterSet set{MaskMatrix(w, h), c};
    Rng rng(seed);
    for (size_t n = 0; n < set.spatial.size(); ++n) set.spatial[n] = uint8_t(rng.next_u64() & 1);
    return set;
}

}  // namespace

TEST_CASE("unit-step quantizer rounds halves away from zero") {
    CHECK(quantize_value(0.4) == 0);
    CHECK(quantize_value(-0.4) == 0);
    CHECK(quantize_value(0.5) == 1);
    CHECK(quantize_value(-0.5) == -1);
    CHECK(quantize_value(3.7) == 4);
    CHECK(quantize_value(-3.7) == -4);
    CHECK_THROWS_AS(quantize_value(std::nan("")), std::invalid_argument);
}

TEST_CASE("conditional pmf against the quadrature oracle") {
    // Independent oracle: Simpson quadrature of the Gaussian density.
    const double p01 = oracles::gaussian_mass_quadrature(-0.5, 0.5, 1.0);
    CHECK(conditional_pmf(0, 1.0) == doctest::Approx(p01).epsilon(1e-9));
    CHECK(conditional_pmf(0, 1.0) == doctest::Approx(0.38292).epsilon(3e-5));

    const double p05 = oracles::gaussian_mass_quadrature(-0.5, 0.5, 0.5);
    CHECK(conditional_pmf(0, 0.5) == doctest::Approx(p05).epsilon(1e-9));
    CHECK(conditional_pmf(0, 0.5) == doctest::Approx(0.68269).epsilon(3e-5));

    const double p3 = oracles::gaussian_mass_quadrature(2.5, 3.5, 1.7);
    CHECK(conditional_pmf(3, 1.7) == doctest::Approx(p3).epsilon(1e-9));
}

TEST_CASE("pmf symmetry and normalization") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const double theta = 0.01 + 5.0 * rng.next_double();
        const int64_t k = int64_t(rng.next_u64() % 50);
        CHECK(conditional_pmf(k, theta) == conditional_pmf(-k, theta));
    }
    for (double theta : {0.05, 0.5, 1.0, 3.0, 20.0}) {
        const int64_t K = int64_t(std::ceil(8.0 * theta));
        double sum = 0;
        for (int64_t k = -K; k <= K; ++k) sum += conditional_pmf(k, theta);
        CHECK(sum >= 1.0 - 1e-6);
    }
}

TEST_CASE("range coder roundtrips a fixed interval script") {
    // Static three-symbol model plus raw bits, exercising carries.
    const uint64_t cum[4] = {0, 60, 61, 64};
    std::vector<int> symbols;
    Rng rng(4096);
    for (int n = 0; n < 2000; ++n) symbols.push_back(int(rng.next_u64() % 3));

    RangeEncoder enc;
    for (int s : symbols) enc.encode(cum[s], cum[s + 1], 64);
    enc.encode_raw_bits(0xDEADBEEF, 32);
    const auto bytes = enc.finish();

    RangeDecoder dec(bytes);
    for (int s : symbols) {
        const uint64_t t = dec.decode_target(64);
        int got = 0;
        while (cum[got + 1] <= t) ++got;
        CHECK(got == s);
        dec.consume(cum[got], cum[got + 1], 64);
    }
    CHECK(dec.decode_raw_bits(32) == 0xDEADBEEF);
}

TEST_CASE("golden streams pin the coder's bit-exact behavior") {
    SUBCASE("interval script") {
        RangeEncoder enc;
        const uint64_t cum[5] = {0, 10, 100, 900, 1024};
        int idx = 0;
        for (int n = 0; n < 64; ++n) {
            idx = (idx * 7 + n) % 4;
            enc.encode(cum[idx], cum[idx + 1], 1024);
        }
        enc.encode_raw_bits(0xC0FFEE, 24);
        const std::vector<uint8_t> expect{
            0x00, 0x0A, 0xA1, 0xED, 0xF8, 0x8D, 0x30, 0x91, 0x4C, 0x9B, 0x1D,
            0x5A, 0xD4, 0xBD, 0x5F, 0x8D, 0x7E, 0x64, 0x48, 0x15, 0x80, 0xEA,
            0x05, 0x41, 0xA1, 0x63, 0xBC, 0xFC, 0x6E, 0x0A, 0x00};
        CHECK(enc.finish() == expect);
    }
    SUBCASE("gaussian feature model") {
        ScaleField theta(2, 2, 2);
        const double tv[8] = {1.0, 2.0, 0.5, 4.0, 1.5, 8.0, 0.25, 3.0};
        for (size_t n = 0; n < 8; ++n) theta[n] = tv[n];
        QuantizedTensor q({2, 2, 2});
        const int32_t qv[8] = {0, -3, 1, 5, -2, 12, 0, -1};
        for (size_t n = 0; n < 8; ++n) q[n] = qv[n];
        const auto fb = encode_features(q, theta, FilterSet::full(2, 2, 2));
        CHECK(fb.bytes == std::vector<uint8_t>{0x59, 0x35, 0x86, 0xB9});
        CHECK(fb.crc == 0x6A858CAAu);
        CHECK(decode_features(fb, theta, FilterSet::full(2, 2, 2)) == q);
    }
}

TEST_CASE("feature codec roundtrips losslessly") {
    Rng seeds(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const uint64_t s = seeds.next_u64();
        ScaleField theta = grid_quantize_scale(random_scale(6, 5, 4, s));
        const FeatureTensor y = sample_gsm_features(theta, s ^ 0xABCD);
        const QuantizedTensor q = quantize(y);
        const FilterSet set = random_set(6, 5, 4, s ^ 0x77);

        const FeatureBitstream bits = encode_features(q, theta, set);
        const QuantizedTensor back = decode_features(bits, theta, set);
        for (uint32_t i = 0; i < 6; ++i)
            for (uint32_t j = 0; j < 5; ++j)
                for (uint32_t c = 0; c < 4; ++c) {
                    const int32_t expect = set.contains(i, j) ? q.at(i, j, c) : 0;
                    CHECK(back.at(i, j, c) == expect);
                }
    }
}

TEST_CASE("escape path carries out-of-support values") {
    ScaleField theta(2, 1, 1, 1.0);
    QuantizedTensor q({2, 1, 1});
    q.at(0, 0, 0) = 1000000;  // far outside ceil(8 theta)
    q.at(1, 0, 0) = -987654;
    const FilterSet set = FilterSet::full(2, 1, 1);
    const FeatureBitstream bits = encode_features(q, theta, set);
    const QuantizedTensor back = decode_features(bits, theta, set);
    CHECK(back.at(0, 0, 0) == 1000000);
    CHECK(back.at(1, 0, 0) == -987654);
}

TEST_CASE("extreme scales and support-edge symbols roundtrip") {
    // Scales from the floor up to DC-sized magnitudes, with symbols pinned
    // at the edges of each alphabet.
    ScaleField theta(3, 2, 2);
    const double tv[12] = {kThetaFloor, 0.01,   0.2,  1.0,  7.5,    64.0,
                           512.0,       2000.0, 0.05, 3.0,  1500.0, 0.5};
    for (size_t n = 0; n < 12; ++n) theta[n] = tv[n];
    theta = grid_quantize_scale(theta);

    QuantizedTensor q({3, 2, 2});
    for (size_t n = 0; n < 12; ++n) {
        const int64_t support = int64_t(std::ceil(8.0 * theta[n]));
        q[n] = (n % 3 == 0) ? int32_t(support) : (n % 3 == 1) ? int32_t(-support) : 0;
    }
    const FilterSet set = FilterSet::full(3, 2, 2);
    const FeatureBitstream bits = encode_features(q, theta, set);
    CHECK(decode_features(bits, theta, set) == q);
}

TEST_CASE("empty selection produces a trivial stream") {
    ScaleField theta(4, 4, 2, 1.0);
    QuantizedTensor q({4, 4, 2});
    const FeatureBitstream bits = encode_features(q, theta, FilterSet::empty(4, 4, 2));
    CHECK(bits.bit_count <= 32);
}

TEST_CASE("coded length stays within 32 bits of the information content") {
    Rng seeds(31337);
    for (int trial = 0; trial < 10; ++trial) {
        const uint64_t s = seeds.next_u64();
        const ScaleField theta = random_scale(8, 8, 6, s);
        const FeatureTensor y = sample_gsm_features(grid_quantize_scale(theta), s ^ 1);
        const QuantizedTensor q = quantize(y);
        const FilterSet set = random_set(8, 8, 6, s ^ 2);
        const RateReport r = measure_rate(q, theta, set);
        CHECK(r.feature_bits <= r.ideal_feature_bits + 32.0);
    }
}

TEST_CASE("a thousand zero symbols at unit scale land in the ideal window") {
    ScaleField theta(10, 100, 1, 1.0);
    QuantizedTensor q({10, 100, 1});
    const FilterSet set = FilterSet::full(10, 100, 1);
    const FeatureBitstream bits = encode_features(q, theta, set);
    const double ideal = -1000.0 * std::log2(conditional_pmf(0, 1.0));
    CHECK(double(bits.bit_count) >= ideal);
    CHECK(double(bits.bit_count) <= ideal + 32.0);
}

TEST_CASE("rate responds monotonically to scale and selection") {
    SUBCASE("smaller coded scale means fewer expected bits") {
        const ScaleField base = random_scale(8, 8, 4, 5150, 1.0, 6.0);
        const FilterSet set = FilterSet::full(8, 8, 4);
        double mean_small = 0, mean_large = 0;
        for (uint64_t d = 0; d < 10; ++d) {
            const FeatureTensor y = sample_gsm_features(base, 900 + d);
            for (double r : {0.3, 0.8}) {
                ScaleField theta(base.shape());
                FeatureTensor scaled(base.shape());
                for (size_t n = 0; n < base.size(); ++n) {
                    theta[n] = r * base[n];
                    scaled[n] = r * y[n];
                }
                const auto bits = encode_features(quantize(scaled), grid_quantize_scale(theta), set);
                (r == 0.3 ? mean_small : mean_large) += double(bits.bit_count);
            }
        }
        CHECK(mean_small <= mean_large);
    }
    SUBCASE("growing the selection never shrinks the stream") {
        const ScaleField theta = grid_quantize_scale(random_scale(8, 8, 4, 717));
        const QuantizedTensor q = quantize(sample_gsm_features(theta, 718));
        FilterSet small = random_set(8, 8, 4, 719);
        FilterSet large = small;
        Rng rng(720);
        for (size_t n = 0; n < large.spatial.size(); ++n)
            if (!large.spatial[n] && (rng.next_u64() & 1)) large.spatial[n] = 1;
        const auto b_small = encode_features(q, theta, small);
        const auto b_large = encode_features(q, theta, large);
        CHECK(b_small.bit_count <= b_large.bit_count);
    }
}

TEST_CASE("side information codes the grid-quantized field exactly") {
    SUBCASE("hand grid arithmetic at step 0.25") {
        CHECK(grid_quantize_value(1.19) == doctest::Approx(std::exp2(0.25)).epsilon(1e-15));
        CHECK(grid_quantize_value(1.0) == 1.0);
        // Values at or below the floor snap to the smallest on-grid scale
        // that does not undershoot it.
        CHECK(grid_quantize_value(kThetaFloor) >= kThetaFloor);
        CHECK(grid_quantize_value(1e-9) >= kThetaFloor);
    }
    SUBCASE("roundtrip is exact on random fields") {
        Rng seeds(606);
        for (int trial = 0; trial < 10; ++trial) {
            const ScaleField theta = random_scale(5, 4, 6, seeds.next_u64(), 0.01, 900.0);
            const ScaleField gridded = grid_quantize_scale(theta);
            const ScaleField back = decode_side_info(encode_side_info(theta));
            CHECK(back == gridded);
        }
    }
    SUBCASE("constant fields converge to near-zero marginal cost") {
        const size_t n = 4096;
        ScaleField theta(64, 64, 1, 2.37);
        const SideInfoBitstream bits = encode_side_info(theta);
        // Header is 20 bytes; the adaptive model should spend o(n) bits on a
        // zero-entropy stream. Allow a generous sublinear budget.
        CHECK(double(bits.bit_count) <= 20 * 8 + 64 + double(n) / 16.0);
    }
    SUBCASE("corruption is rejected") {
        const ScaleField theta = random_scale(4, 4, 3, 808);
        SideInfoBitstream bits = encode_side_info(theta);
        bits.bytes[bits.bytes.size() / 2] ^= 0x10;
        CHECK_THROWS_AS(decode_side_info(bits), DecodeError);
    }
}

TEST_CASE("feature stream corruption is rejected") {
    const ScaleField theta = grid_quantize_scale(random_scale(4, 4, 3, 911));
    const QuantizedTensor q = quantize(sample_gsm_features(theta, 912));
    const FilterSet set = FilterSet::full(4, 4, 3);
    FeatureBitstream bits = encode_features(q, theta, set);
    bits.bytes[bits.bytes.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(decode_features(bits, theta, set), DecodeError);
}

TEST_CASE("measure_rate cross-checks the coded sections") {
    const ScaleField theta = random_scale(6, 6, 4, 1001);
    const QuantizedTensor q = quantize(sample_gsm_features(grid_quantize_scale(theta), 1002));
    const FilterSet set = random_set(6, 6, 4, 1003);

    const RateReport r = measure_rate(q, theta, set, false);
    const RateReport rm = measure_rate(q, theta, set, true);
    CHECK(r.total_bits == r.feature_bits + r.side_bits);
    CHECK(rm.total_bits == r.feature_bits + r.side_bits + r.mask_bits);
    CHECK(r.feature_bits ==
          double(encode_features(q, grid_quantize_scale(theta), set).bit_count));
    CHECK(r.side_bits == double(encode_side_info(theta).bit_count));
    CHECK(r.mask_bits == double(encode_mask(set).bit_count));
}

TEST_CASE("grid quantization is idempotent and floored") {
    const ScaleField theta = random_scale(9, 7, 4, 2718, 0.05, 50.0);
    const ScaleField gridded = grid_quantize_scale(theta);
    CHECK(grid_quantize_scale(gridded) == gridded);
    for (size_t n = 0; n < gridded.size(); ++n) CHECK(gridded[n] >= kThetaFloor);
}

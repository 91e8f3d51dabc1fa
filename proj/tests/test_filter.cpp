#include "doctest.h"

#include <cmath>

#include "gvsc/filter.hpp"

using namespace gvsc;

namespace {

ClassModel two_class_model() {
    ClassModel m;
    m.feature_maps = Tensor3(2, 2, 2);
    // Map sums: map 0 -> 3, map 1 -> 5.
    m.feature_maps.at(0, 0, 0) = 1;
    m.feature_maps.at(0, 1, 0) = 2;
    m.feature_maps.at(1, 0, 1) = 2;
    m.feature_maps.at(1, 1, 1) = 3;
    m.weights = {{1.0, 0.0}, {0.0, 1.0}};
    m.labels = {"a", "b"};
    return m;
}

}  // namespace

TEST_CASE("class scores and probabilities") {
    SUBCASE("equal scores split the softmax") {
        ClassModel m;
        m.feature_maps = Tensor3(1, 1, 1);
        m.feature_maps.at(0, 0, 0) = 1.0;
        m.weights = {{1.0}, {1.0}};
        m.labels = {"x", "y"};
        const auto scores = class_scores(m);
        CHECK(scores[0].prob == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(scores[1].prob == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("scores are weighted map sums") {
        const auto scores = class_scores(two_class_model());
        CHECK(scores[0].score == doctest::Approx(3.0));
        CHECK(scores[1].score == doctest::Approx(5.0));
        CHECK(scores[0].prob + scores[1].prob == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("hand softmax of (0, ln2, ln4)") {
        ClassModel m;
        m.feature_maps = Tensor3(1, 1, 1);
        m.feature_maps.at(0, 0, 0) = 1.0;
        m.weights = {{0.0}, {std::log(2.0)}, {std::log(4.0)}};
        m.labels = {"p", "q", "r"};
        const auto scores = class_scores(m);
        CHECK(scores[0].prob == doctest::Approx(1.0 / 7).epsilon(1e-12));
        CHECK(scores[1].prob == doctest::Approx(2.0 / 7).epsilon(1e-12));
        CHECK(scores[2].prob == doctest::Approx(4.0 / 7).epsilon(1e-12));
    }
    SUBCASE("empty class list throws") {
        ClassModel m;
        m.feature_maps = Tensor3(1, 1, 1);
        CHECK_THROWS_AS(class_scores(m), std::invalid_argument);
    }
}

TEST_CASE("class importance is the weighted map sum") {
    const ClassModel m = two_class_model();
    SUBCASE("zero weight eliminates a map") {
        const Matrix imp = class_importance(m, 0);
        for (uint32_t i = 0; i < 2; ++i)
            for (uint32_t j = 0; j < 2; ++j)
                CHECK(imp.at(i, j) == m.feature_maps.at(i, j, 0));
    }
    SUBCASE("convex combination of equal maps is the map") {
        ClassModel eq;
        eq.feature_maps = Tensor3(2, 2, 2);
        for (uint32_t i = 0; i < 2; ++i)
            for (uint32_t j = 0; j < 2; ++j) {
                eq.feature_maps.at(i, j, 0) = double(i + j);
                eq.feature_maps.at(i, j, 1) = double(i + j);
            }
        eq.weights = {{0.5, 0.5}};
        eq.labels = {"only"};
        const Matrix imp = class_importance(eq, 0);
        for (uint32_t i = 0; i < 2; ++i)
            for (uint32_t j = 0; j < 2; ++j) CHECK(imp.at(i, j) == doctest::Approx(double(i + j)));
    }
    SUBCASE("weights (2, -1) on unit maps give unit importance") {
        ClassModel ones;
        ones.feature_maps = Tensor3(2, 2, 2);
        for (size_t n = 0; n < ones.feature_maps.size(); ++n) ones.feature_maps[n] = 1.0;
        ones.weights = {{2.0, -1.0}};
        ones.labels = {"only"};
        const Matrix imp = class_importance(ones, 0);
        for (size_t n = 0; n < imp.size(); ++n) CHECK(imp[n] == doctest::Approx(1.0));
    }
    SUBCASE("index out of range") {
        CHECK_THROWS_AS(class_importance(m, 5), std::out_of_range);
    }
}

TEST_CASE("normalize_upsample") {
    SUBCASE("min-max endpoints") {
        Matrix raw(2, 2);
        raw.at(0, 0) = 0;
        raw.at(0, 1) = 10;
        raw.at(1, 0) = 10;
        raw.at(1, 1) = 0;
        const Matrix out = normalize_upsample(raw, 2, 2);
        CHECK(out.at(0, 0) == 0.0);
        CHECK(out.at(0, 1) == 1.0);
    }
    SUBCASE("constant input maps to one half") {
        Matrix raw(3, 3, 7.5);
        const Matrix out = normalize_upsample(raw, 6, 6);
        for (size_t n = 0; n < out.size(); ++n) CHECK(out[n] == 0.5);
    }
    SUBCASE("2x2 checker to 4x4, corner-aligned weights evaluated by hand") {
        Matrix raw(2, 2);
        raw.at(0, 0) = 0;
        raw.at(0, 1) = 1;
        raw.at(1, 0) = 1;
        raw.at(1, 1) = 0;
        const Matrix out = normalize_upsample(raw, 4, 4);
        // Sampling positions are k/3 for k = 0..3; the bilinear surface is
        // f(a, b) = a + b - 2ab. Central samples by direct evaluation:
        // f(1/3, 1/3) = f(2/3, 2/3) = 4/9, f(1/3, 2/3) = f(2/3, 1/3) = 5/9.
        CHECK(out.at(1, 1) == doctest::Approx(4.0 / 9).epsilon(1e-12));
        CHECK(out.at(1, 2) == doctest::Approx(5.0 / 9).epsilon(1e-12));
        CHECK(out.at(2, 1) == doctest::Approx(5.0 / 9).epsilon(1e-12));
        CHECK(out.at(2, 2) == doctest::Approx(4.0 / 9).epsilon(1e-12));
        // The saddle symmetry pins the mean of the central samples at 1/2
        // regardless of resampling convention.
        const double mean =
            (out.at(1, 1) + out.at(1, 2) + out.at(2, 1) + out.at(2, 2)) / 4.0;
        CHECK(mean == doctest::Approx(0.5).epsilon(1e-12));
        // Corners preserved.
        CHECK(out.at(0, 0) == 0.0);
        CHECK(out.at(3, 3) == 0.0);
        CHECK(out.at(0, 3) == 1.0);
        for (size_t n = 0; n < out.size(); ++n) {
            CHECK(out[n] >= 0.0);
            CHECK(out[n] <= 1.0);
        }
    }
}

TEST_CASE("select_importance picks the argmax class") {
    SUBCASE("single class") {
        ClassModel m;
        m.feature_maps = Tensor3(2, 2, 1);
        m.feature_maps.at(0, 0, 0) = 1.0;
        m.weights = {{1.0}};
        m.labels = {"only"};
        CHECK(select_importance(m, 2, 2).second == "only");
    }
    SUBCASE("exact tie breaks to the lowest index") {
        ClassModel m;
        m.feature_maps = Tensor3(1, 1, 1);
        m.feature_maps.at(0, 0, 0) = 2.0;
        m.weights = {{1.0}, {1.0}};
        m.labels = {"first", "second"};
        CHECK(select_importance(m, 1, 1).second == "first");
    }
    SUBCASE("largest probability wins") {
        ClassModel m;
        m.feature_maps = Tensor3(1, 1, 1);
        m.feature_maps.at(0, 0, 0) = 1.0;
        m.weights = {{std::log(0.2)}, {std::log(0.7)}, {std::log(0.1)}};
        m.labels = {"a", "b", "c"};
        CHECK(select_importance(m, 1, 1).second == "b");
    }
    SUBCASE("positive rescaling preserves scores up to the factor and the argmax") {
        ClassModel m = two_class_model();
        const auto base = class_scores(m);
        const double c = 3.5;
        for (size_t n = 0; n < m.feature_maps.size(); ++n) m.feature_maps[n] *= c;
        const auto scaled = class_scores(m);
        for (size_t k = 0; k < base.size(); ++k)
            CHECK(scaled[k].score == doctest::Approx(c * base[k].score).epsilon(1e-12));
        CHECK(select_importance(m, 2, 2).second == "b");
    }
}

TEST_CASE("saliency surrogate") {
    SUBCASE("single spike") {
        FeatureTensor y(3, 3, 2);
        y.at(1, 2, 0) = 4.0;
        const Matrix imp = saliency_surrogate(y);
        for (uint32_t i = 0; i < 3; ++i)
            for (uint32_t j = 0; j < 3; ++j)
                CHECK(imp.at(i, j) == ((i == 1 && j == 2) ? 1.0 : 0.0));
    }
    SUBCASE("uniform energy is neutral") {
        FeatureTensor y(3, 3, 2, 1.5);
        const Matrix imp = saliency_surrogate(y);
        for (size_t n = 0; n < imp.size(); ++n) CHECK(imp[n] == 0.5);
    }
    SUBCASE("two plateaus normalize to 0 and 1") {
        FeatureTensor y(4, 2, 1);
        for (uint32_t i = 0; i < 4; ++i)
            for (uint32_t j = 0; j < 2; ++j) y.at(i, j, 0) = i < 2 ? 2.0 : 1.0;  // energy 4:1
        const Matrix imp = saliency_surrogate(y);
        for (uint32_t i = 0; i < 4; ++i)
            for (uint32_t j = 0; j < 2; ++j) CHECK(imp.at(i, j) == (i < 2 ? 1.0 : 0.0));
    }
}

TEST_CASE("filter sets") {
    Matrix imp(2, 2);
    imp.at(0, 0) = 0.9;
    imp.at(0, 1) = 0.2;
    imp.at(1, 0) = 0.5;
    imp.at(1, 1) = 0.7;
    SUBCASE("threshold keeps the right positions, channel-complete") {
        const FilterSet set = build_filter_set(imp, 0.6, 4);
        CHECK(set.contains(0, 0));
        CHECK(set.contains(1, 1));
        CHECK(!set.contains(0, 1));
        CHECK(!set.contains(1, 0));
        CHECK(set.selected_count() == 2 * 4);
    }
    SUBCASE("alpha zero keeps everything") {
        const FilterSet set = build_filter_set(imp, 0.0, 4);
        CHECK(set.selected_count() == 4 * 4);
    }
    SUBCASE("alpha above one keeps nothing") {
        const FilterSet set = build_filter_set(imp, 1.01, 4);
        CHECK(set.selected_count() == 0);
    }
    SUBCASE("boundary is inclusive") {
        const FilterSet set = build_filter_set(imp, 0.7, 1);
        CHECK(set.contains(1, 1));
    }
    SUBCASE("nesting: a higher threshold selects a subset") {
        Rng rng(55);
        for (int trial = 0; trial < 50; ++trial) {
            Matrix m(5, 4);
            for (size_t n = 0; n < m.size(); ++n) m[n] = rng.next_double();
            const double a = rng.next_double(), b = rng.next_double();
            const double lo = std::min(a, b), hi = std::max(a, b);
            const FilterSet shi = build_filter_set(m, hi, 2);
            const FilterSet slo = build_filter_set(m, lo, 2);
            for (size_t n = 0; n < m.size(); ++n)
                if (shi.spatial[n]) CHECK(slo.spatial[n]);
        }
    }
}

TEST_CASE("apply_filter masks exactly") {
    FeatureTensor y(3, 2, 2);
    Rng rng(9);
    for (size_t n = 0; n < y.size(); ++n) y[n] = rng.next_symmetric();
    SUBCASE("full set is the identity") {
        CHECK(apply_filter(y, FilterSet::full(3, 2, 2)) == y);
    }
    SUBCASE("empty set zeroes everything") {
        const FeatureTensor out = apply_filter(y, FilterSet::empty(3, 2, 2));
        for (size_t n = 0; n < out.size(); ++n) CHECK(out[n] == 0.0);
    }
    SUBCASE("half mask agrees with elementwise product") {
        FilterSet set = FilterSet::empty(3, 2, 2);
        set.spatial.at(0, 0) = 1;
        set.spatial.at(2, 1) = 1;
        const FeatureTensor out = apply_filter(y, set);
        for (uint32_t i = 0; i < 3; ++i)
            for (uint32_t j = 0; j < 2; ++j)
                for (uint32_t c = 0; c < 2; ++c) {
                    const double expect = set.spatial.at(i, j) ? y.at(i, j, c) : 0.0;
                    CHECK(out.at(i, j, c) == expect);
                }
    }
    SUBCASE("dimension mismatch throws") {
        CHECK_THROWS_AS(apply_filter(y, FilterSet::full(2, 2, 2)), std::invalid_argument);
    }
}

TEST_CASE("mask run-length coding") {
    SUBCASE("hand-coded 0011100 stream") {
        FilterSet set = FilterSet::empty(7, 1, 1);
        set.spatial.at(2, 0) = set.spatial.at(3, 0) = set.spatial.at(4, 0) = 1;
        const MaskBitstream bits = encode_mask(set);
        // 32 header bits + 1 first-bit + gamma(2), gamma(3), gamma(2) at 3 bits each.
        CHECK(bits.bit_count == 32 + 1 + 9);
        const FilterSet back = decode_mask(bits, 1);
        CHECK(back.spatial == set.spatial);
    }
    SUBCASE("all ones is a single run") {
        const FilterSet set = FilterSet::full(8, 8, 1);
        const MaskBitstream bits = encode_mask(set);
        // gamma(64) costs 13 bits.
        CHECK(bits.bit_count == 32 + 1 + 13);
        CHECK(decode_mask(bits, 1).spatial == set.spatial);
    }
    SUBCASE("random masks roundtrip exactly") {
        Rng rng(123);
        for (int trial = 0; trial < 100; ++trial) {
            const uint32_t w = 1 + uint32_t(rng.next_u64() % 40);
            const uint32_t h = 1 + uint32_t(rng.next_u64() % 40);
            FilterSet set{MaskMatrix(w, h), 3};
            for (size_t n = 0; n < set.spatial.size(); ++n)
                set.spatial[n] = uint8_t(rng.next_u64() & 1);
            const FilterSet back = decode_mask(encode_mask(set), 3);
            CHECK(back.spatial == set.spatial);
            CHECK(back.channels == 3);
        }
    }
    SUBCASE("bounded size when runs are long") {
        // Sparse transitions: run count stays at or below 256 on a 64x64
        // mask, and the gamma-coded size must beat the raw 4096 bits.
        Rng rng(77);
        FilterSet set{MaskMatrix(64, 64), 1};
        uint8_t cur = 0;
        size_t runs = 1;
        for (size_t n = 0; n < set.spatial.size(); ++n) {
            if (rng.next_double() < 0.03 && runs < 256 && n > 0) {
                cur ^= 1;
                ++runs;
            }
            set.spatial[n] = cur;
        }
        const MaskBitstream bits = encode_mask(set);
        CHECK(bits.bit_count <= 4096 + 33);
        CHECK(decode_mask(bits, 1).spatial == set.spatial);
    }
    SUBCASE("corruption is rejected") {
        const FilterSet set = FilterSet::full(16, 16, 1);
        MaskBitstream bits = encode_mask(set);
        SUBCASE("flipped byte fails the checksum") {
            bits.bytes[4] ^= 0x40;
            CHECK_THROWS_AS(decode_mask(bits, 1), DecodeError);
        }
        SUBCASE("truncation fails") {
            bits.bytes.resize(bits.bytes.size() - 1);
            bits.crc = crc32(bits.bytes);
            CHECK_THROWS_AS(decode_mask(bits, 1), DecodeError);
        }
    }
}

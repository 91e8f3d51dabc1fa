#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gvsc/tensor.hpp"

namespace gvsc {

// Backbone feature maps plus per-class weight vectors, as produced by a
// classification head. Loaded from files; no network runs here.
struct ClassModel {
    Tensor3 feature_maps;                       // (W_f, H_f, C_f)
    std::vector<std::vector<double>> weights;   // one vector of length C_f per class
    std::vector<std::string> labels;

    void validate() const;
};

struct ClassScore {
    std::string label;
    double score = 0.0;  // S_k
    double prob = 0.0;   // softmax(S)_k
};

// S_k = sum_c w_c^k sum_ij f_ijc; probabilities via softmax.
std::vector<ClassScore> class_scores(const ClassModel& model);

// Raw weighted sum of feature maps for class k, native (W_f, H_f) dims.
Matrix class_importance(const ClassModel& model, size_t k);

// Min-max normalize to [0, 1] (constant input maps to 0.5), then bilinear
// upsample (corner-aligned) to the target dims.
Matrix normalize_upsample(const Matrix& raw, uint32_t target_w, uint32_t target_h);

// Importance of the class with the largest detection probability;
// argmax ties break toward the lowest class index.
std::pair<Matrix, std::string> select_importance(const ClassModel& model, uint32_t target_w,
                                                 uint32_t target_h);

// Per-position feature energy sum_c y^2, min-max normalized. Used when no
// class model is available.
Matrix saliency_surrogate(const FeatureTensor& features);

// Channel-complete selection: a spatial position is either included for all
// channels or excluded for all of them.
struct FilterSet {
    MaskMatrix spatial;
    uint32_t channels = 0;

    size_t selected_count() const { return spatial.count() * channels; }
    bool contains(uint32_t i, uint32_t j) const { return spatial.at(i, j) != 0; }

    static FilterSet full(uint32_t w, uint32_t h, uint32_t channels);
    static FilterSet empty(uint32_t w, uint32_t h, uint32_t channels);
};

// mask(i, j) = 1 iff importance(i, j) >= alpha.
FilterSet build_filter_set(const Matrix& importance, double alpha, uint32_t channels);

// y on the set, 0 elsewhere.
FeatureTensor apply_filter(const FeatureTensor& features, const FilterSet& set);

struct MaskBitstream {
    std::vector<uint8_t> bytes;
    size_t bit_count = 0;  // coded length B_P in bits (before byte padding)
    uint32_t crc = 0;      // set at encode time, verified by decode_mask
};

// Run-length coding of the spatial mask: u16 dims, one first-bit flag,
// then Elias-gamma run lengths.
MaskBitstream encode_mask(const FilterSet& set);
FilterSet decode_mask(const MaskBitstream& bits, uint32_t channels);

}  // namespace gvsc

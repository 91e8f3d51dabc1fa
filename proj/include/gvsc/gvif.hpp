#pragma once

#include <vector>

#include "gvsc/codec.hpp"
#include "gvsc/filter.hpp"
#include "gvsc/gsm.hpp"
#include "gvsc/tensor.hpp"

namespace gvsc {

struct HvsParams {
    double gamma2 = 0.1;  // visual-noise variance
};

struct GvifReport {
    double numerator_bits = 0;    // mutual information kept by the distorted path
    double denominator_bits = 0;  // mutual information of the reference path
    double value = 0;             // ratio, in [0, 1] for beta in (0, 1]
    std::vector<double> channel_numerator;
    std::vector<double> channel_denominator;
};

// Per-element selection without the channel-complete restriction; the
// metric itself is defined element-wise.
struct ElementMask {
    Shape3 shape{};
    std::vector<uint8_t> v;

    static ElementMask full(Shape3 s) { return {s, std::vector<uint8_t>(s.size(), 1)}; }
    static ElementMask none(Shape3 s) { return {s, std::vector<uint8_t>(s.size(), 0)}; }
    static ElementMask from_filter_set(const FilterSet& set);
};

// (1/2) sum over all elements of log2(1 + theta^2 / gamma^2).
double reference_information(const ScaleField& theta_r, const HvsParams& hvs);

// (1/2) sum over the selected elements of log2(1 + (beta * theta)^2 / gamma^2).
double distorted_information(const ScaleField& theta_r, const ScalingField& beta,
                             const ElementMask& set, const HvsParams& hvs);
double distorted_information(const ScaleField& theta_r, const ScalingField& beta,
                             const FilterSet& set, const HvsParams& hvs);

GvifReport gvif(const ScaleField& theta_r, const ScalingField& beta, const ElementMask& set,
                const HvsParams& hvs);
GvifReport gvif(const ScaleField& theta_r, const ScalingField& beta, const FilterSet& set,
                const HvsParams& hvs);

// Full per-image chain: reference scale field from the extractor (hyper
// latent on the transmission grid), profile shrinkage, importance-based
// filtering, then the information ratio.
GvifReport gvif_for_image(const ImageTensor& image, const CoderProfile& profile, double alpha,
                          const ExtractorConfig& cfg, const HvsParams& hvs);

// PSNR restricted to masked pixels (mask applies to all three channels);
// capped at 100 dB. Throws on an empty mask.
double mask_psnr(const ImageTensor& x, const ImageTensor& x_hat, const MaskMatrix& mask);

}  // namespace gvsc

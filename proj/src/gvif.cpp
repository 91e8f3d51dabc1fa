#include "gvsc/gvif.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvsc {

ElementMask ElementMask::from_filter_set(const FilterSet& set) {
    const Shape3 s{set.spatial.width(), set.spatial.height(), set.channels};
    ElementMask m{s, std::vector<uint8_t>(s.size(), 0)};
    size_t n = 0;
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            const uint8_t b = set.contains(i, j) ? 1 : 0;
            for (uint32_t c = 0; c < s.c; ++c) m.v[n++] = b;
        }
    return m;
}

namespace {

void check_hvs(const HvsParams& hvs) {
    if (!(hvs.gamma2 > 0)) throw std::invalid_argument("gamma2 must be positive");
}

}  // namespace

double reference_information(const ScaleField& theta_r, const HvsParams& hvs) {
    check_hvs(hvs);
    double acc = 0;
    for (size_t n = 0; n < theta_r.size(); ++n) {
        if (!(theta_r[n] >= 0)) throw std::invalid_argument("scale must be nonnegative");
        acc += std::log2(1.0 + theta_r[n] * theta_r[n] / hvs.gamma2);
    }
    return 0.5 * acc;
}

double distorted_information(const ScaleField& theta_r, const ScalingField& beta,
                             const ElementMask& set, const HvsParams& hvs) {
    check_hvs(hvs);
    require_same_shape(theta_r.shape(), beta.shape(), "distorted_information");
    require_same_shape(theta_r.shape(), set.shape, "distorted_information");
    double acc = 0;
    for (size_t n = 0; n < theta_r.size(); ++n) {
        if (!set.v[n]) continue;
        const double bt = beta[n] * theta_r[n];
        acc += std::log2(1.0 + bt * bt / hvs.gamma2);
    }
    return 0.5 * acc;
}

double distorted_information(const ScaleField& theta_r, const ScalingField& beta,
                             const FilterSet& set, const HvsParams& hvs) {
    return distorted_information(theta_r, beta, ElementMask::from_filter_set(set), hvs);
}

GvifReport gvif(const ScaleField& theta_r, const ScalingField& beta, const ElementMask& set,
                const HvsParams& hvs) {
    check_hvs(hvs);
    require_same_shape(theta_r.shape(), beta.shape(), "gvif");
    require_same_shape(theta_r.shape(), set.shape, "gvif");
    const Shape3 s = theta_r.shape();

    GvifReport rep;
    rep.channel_numerator.assign(s.c, 0.0);
    rep.channel_denominator.assign(s.c, 0.0);
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j)
            for (uint32_t c = 0; c < s.c; ++c) {
                const size_t n = theta_r.index(i, j, c);
                const double t = theta_r[n];
                rep.channel_denominator[c] += 0.5 * std::log2(1.0 + t * t / hvs.gamma2);
                if (set.v[n]) {
                    const double bt = beta[n] * t;
                    rep.channel_numerator[c] += 0.5 * std::log2(1.0 + bt * bt / hvs.gamma2);
                }
            }
    for (uint32_t c = 0; c < s.c; ++c) {
        rep.numerator_bits += rep.channel_numerator[c];
        rep.denominator_bits += rep.channel_denominator[c];
    }
    if (!(rep.denominator_bits > 0))
        throw std::domain_error("degenerate input: reference information is zero");
    rep.value = rep.numerator_bits / rep.denominator_bits;
    return rep;
}

GvifReport gvif(const ScaleField& theta_r, const ScalingField& beta, const FilterSet& set,
                const HvsParams& hvs) {
    return gvif(theta_r, beta, ElementMask::from_filter_set(set), hvs);
}

GvifReport gvif_for_image(const ImageTensor& image, const CoderProfile& profile, double alpha,
                          const ExtractorConfig& cfg, const HvsParams& hvs) {
    const FeatureTensor y = extract_features(image, cfg);
    // Reference scale field as realized by the quantized hyper latent; the
    // analog profile shrinkage is applied on top of it (quantization of the
    // shrunken scale is excluded from the distortion chain).
    const ScaleField theta_r = transmission_scale_field(y, cfg);
    const ScaleField theta_c = apply_coder_profile(theta_r, profile);
    const ScalingField beta = compute_scaling_field(theta_c, theta_r);
    const Matrix importance = saliency_surrogate(y);
    const FilterSet set = build_filter_set(importance, alpha, y.shape().c);
    return gvif(theta_r, beta, set, hvs);
}

double mask_psnr(const ImageTensor& x, const ImageTensor& x_hat, const MaskMatrix& mask) {
    require_same_shape(x.shape(), x_hat.shape(), "mask_psnr");
    const Shape3 s = x.shape();
    if (mask.width() != s.w || mask.height() != s.h)
        throw std::invalid_argument("mask dims do not match image");

    double acc = 0;
    size_t covered = 0;
    for (uint32_t i = 0; i < s.w; ++i)
        for (uint32_t j = 0; j < s.h; ++j) {
            if (!mask.at(i, j)) continue;
            ++covered;
            for (uint32_t c = 0; c < s.c; ++c) {
                const double d = x.at(i, j, c) - x_hat.at(i, j, c);
                acc += d * d;
            }
        }
    if (covered == 0) throw std::invalid_argument("mask_psnr: empty mask");
    const double mse = acc / (double(covered) * s.c);
    if (mse == 0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

}  // namespace gvsc

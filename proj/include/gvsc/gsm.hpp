#pragma once

#include <string>
#include <vector>

#include "gvsc/tensor.hpp"

namespace gvsc {

// Configuration of the analytic feature extractor: an orthonormal block
// transform per color channel. Block position maps to the feature grid
// (i, j); (color, basis index) maps to the channel axis, so C_y = 3 * b^2.
struct ExtractorConfig {
    uint32_t block_size = 8;    // power of two
    uint32_t scale_window = 3;  // odd; window for scale estimation and side-info tiling
    std::string basis = "dct";

    void validate() const;
};

// One rate-distortion operating point: a uniform shrinkage of the scale
// field plus descriptive metadata.
struct CoderProfile {
    int id = 0;
    double shrink_ratio = 1.0;  // r in (0, 1]
    double nominal_psnr_db = 0.0;
    std::string description;
};

// Ordered list of profiles, best quality first (nominal PSNR descending).
class ProfileTable {
public:
    ProfileTable() = default;
    explicit ProfileTable(std::vector<CoderProfile> profiles);

    // 19 profiles: identity reference followed by geometrically spaced
    // shrink ratios, nominal PSNR spanning 40 down to 27 dB.
    static ProfileTable default_table();

    const std::vector<CoderProfile>& profiles() const { return profiles_; }
    size_t size() const { return profiles_.size(); }
    const CoderProfile& operator[](size_t idx) const { return profiles_[idx]; }
    const CoderProfile& by_id(int id) const;
    const CoderProfile& reference() const { return profiles_.front(); }

private:
    std::vector<CoderProfile> profiles_;
};

// y_ijc = theta_ijc * u_ijc with u iid standard normal; deterministic in seed.
FeatureTensor sample_gsm_features(const ScaleField& theta, uint64_t seed);

FeatureTensor extract_features(const ImageTensor& image, const ExtractorConfig& cfg);

// Exact inverse of extract_features (up to fp roundoff), clamped to [0, 255].
ImageTensor reconstruct_image(const FeatureTensor& features, const ExtractorConfig& cfg);

// Variant that skips the [0, 255] clamp; used by roundtrip checks.
ImageTensor reconstruct_image_unclamped(const FeatureTensor& features, const ExtractorConfig& cfg);

// Crop a reconstructed image back to its pre-padding size.
ImageTensor crop_image(const ImageTensor& img, uint32_t width, uint32_t height);

// Windowed RMS over the spatial neighborhood, reflective boundary, floored.
ScaleField estimate_scale_field(const FeatureTensor& features, uint32_t window);

// theta_c = max(theta_floor, r * theta_r).
ScaleField apply_coder_profile(const ScaleField& theta_r, const CoderProfile& profile);

// The transmitted hyper latent is the scale field sampled on a tile grid
// with stride equal to the estimation window.
ScaleField downsample_scale_tiles(const ScaleField& theta_full, uint32_t window);
ScaleField replicate_scale_tiles(const ScaleField& tiles, const Shape3& target, uint32_t window);

struct ClampStats {
    size_t clamped_high = 0;  // beta > 1 before clamping
    size_t clamped_low = 0;   // beta < eps before clamping
};

// beta = clamp(theta_c / theta_r, kBetaEps, 1].
ScalingField compute_scaling_field(const ScaleField& theta_c, const ScaleField& theta_r,
                                   ClampStats* stats = nullptr);

}  // namespace gvsc

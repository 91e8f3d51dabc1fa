#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gvsc/codec.hpp"
#include "gvsc/filter.hpp"
#include "gvsc/gsm.hpp"
#include "gvsc/gvif.hpp"
#include "gvsc/optimizer.hpp"

namespace gvsc {

struct PipelineConfig {
    ExtractorConfig extractor;
    HvsParams hvs;
    ProfileTable profiles = ProfileTable::default_table();
    bool include_mask_in_rate = false;  // count B_P toward the total rate
    // Class-activation importance when a backbone model is available;
    // otherwise the feature-energy surrogate drives the filtering.
    std::shared_ptr<const ClassModel> class_model;
};

// Importance map driving the filter: the selected class-activation map of
// cfg.class_model when present, else the saliency surrogate.
Matrix pipeline_importance(const FeatureTensor& features, const PipelineConfig& cfg);

// gvif_for_image with the pipeline's importance source.
GvifReport pipeline_gvif(const ImageTensor& image, const CoderProfile& profile, double alpha,
                         const PipelineConfig& cfg);

// Serialized "GVSC" container: header, prompt, then CRC-guarded sections
// [side info][mask][features].
struct Payload {
    std::vector<uint8_t> bytes;

    struct Meta {
        uint8_t version = 1;
        bool mask_in_rate = false;
        uint8_t block_size = 8;
        uint8_t scale_window = 3;
        Shape3 feature_dims{};
        uint32_t image_w = 0, image_h = 0;  // pre-padding size
        int32_t profile_id = 0;
        float alpha = 0;
        float grid_step = 0.25f;
        std::string prompt;
        size_t side_bits = 0;
        size_t mask_bits = 0;
        size_t feature_bits = 0;
    };

    Meta parse_meta() const;
    size_t total_bits() const { return bytes.size() * 8; }
};

// extract -> filter -> scale -> quantize -> entropy-code, in that order.
Payload encode_image(const ImageTensor& image, const CoderProfile& profile, double alpha,
                     const PipelineConfig& cfg, const std::string& prompt = "");

struct DecodeResult {
    ImageTensor x_hat;        // decoded features only, zeros outside the set
    ImageTensor x_tilde;      // set elements anchored, remainder generated
    FilterSet set;
    QuantizedTensor anchored; // decoded integer features
    ScaleField theta_coded;   // transmitted (grid-quantized) scale field
    MaskMatrix pixel_mask;    // spatial mask upsampled to image resolution
};

DecodeResult decode_payload(const Payload& payload, const PipelineConfig& cfg, uint64_t seed);

// Anchors decoded values on the set; off-set elements are fresh GSM samples
// at the reference scale. This realizes the statistical generation model the
// fidelity metric is derived under.
FeatureTensor surrogate_generate(const QuantizedTensor& decoded, const FilterSet& set,
                                 const ScaleField& theta_r, uint64_t seed);

// ---------------------------------------------------------------------------
// Datasets.
// ---------------------------------------------------------------------------

struct Dataset {
    std::vector<ImageTensor> images;
    std::vector<std::string> ids;

    size_t size() const { return images.size(); }
};

// Seeded scenes: piecewise-constant scale fields with a planted high-energy
// object region, realized through the GSM model and the inverse transform.
Dataset generate_synthetic_dataset(size_t count, uint32_t width, uint32_t height, uint64_t seed,
                                   const ExtractorConfig& cfg = {});

Dataset load_dataset_dir(const std::string& dir);
void save_dataset_dir(const Dataset& ds, const std::string& dir);

// ---------------------------------------------------------------------------
// Fast evaluation oracle for the optimizer.
// ---------------------------------------------------------------------------

// Precomputes, per (image, profile), the per-position GVIF and ideal-rate
// contributions sorted by importance, so V(alpha) and B(alpha) evaluate via
// prefix sums. Rate follows the ideal (information content) form; side-info
// bits use the actually coded length, which is alpha-independent.
EvalOracle make_pipeline_oracle(const Dataset& dataset, const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments.
// ---------------------------------------------------------------------------

struct SweepRow {
    double snr_db = 0;
    int profile_id = 0;
    double alpha = 0;
    double mean_gvif = 0;
    double mean_bits = 0;
    double latency_s = 0;
    double mean_mask_psnr_db = 0;
    bool has_mask_psnr = false;
    bool ok = false;
    std::string error;
};

std::vector<SweepRow> run_snr_sweep(const Dataset& dataset, const std::vector<double>& snr_grid_db,
                                    double bandwidth_hz, const OptimizerConfig& opt_cfg,
                                    const PipelineConfig& cfg, uint64_t seed);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct CorrelationReport {
    Matrix inside_map;        // per-position mean correlation across channels (set positions)
    Matrix outside_map;
    double inside_mean = 0;
    double outside_mean_abs = 0;
    double outside_max_abs = 0;
    size_t samples = 0;
    size_t inside_positions = 0;
    size_t outside_positions = 0;
};

// Draws paired (true, generated) feature samples through the coding chain
// and reports per-position Pearson correlations inside vs outside the set.
CorrelationReport validate_generation_independence(const Dataset& dataset, const FilterSet& set,
                                                   size_t n_samples, const PipelineConfig& cfg,
                                                   uint64_t seed);

// Per-profile mean PSNR of the full decode chain at alpha = 0, written as a
// fresh profile table (the calibration path for nominal_psnr_db).
ProfileTable calibrate_profiles(const Dataset& dataset, const PipelineConfig& cfg);

}  // namespace gvsc

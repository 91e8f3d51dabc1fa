// Command-line front end: encode/decode payloads, fidelity reports,
// channel-adaptive optimization, SNR sweeps, and dataset utilities.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "gvsc/channel.hpp"
#include "gvsc/io.hpp"
#include "gvsc/pipeline.hpp"

using namespace gvsc;

namespace {

struct CommonOpts {
    uint64_t seed = 1;
    std::string config_path;
    std::string profiles_path;
    std::string class_maps_path;
    std::string class_weights_path;
    uint32_t block_size = 8;
    uint32_t scale_window = 3;
    double gamma2 = 0.1;
    bool include_mask_rate = false;
    bool block_size_set = false;
    bool scale_window_set = false;
    bool gamma2_set = false;
};

double get_or(const std::map<std::string, std::string>& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : std::stod(it->second);
}

OptimizerConfig optimizer_from_config(const std::map<std::string, std::string>& kv) {
    OptimizerConfig cfg;
    cfg.penalty_scale = get_or(kv, "penalty_scale", cfg.penalty_scale);
    cfg.penalty_abs = get_or(kv, "penalty_abs", cfg.penalty_abs);
    cfg.nu = get_or(kv, "nu", cfg.nu);
    cfg.eta = get_or(kv, "eta", cfg.eta);
    cfg.eta_decay = get_or(kv, "eta_decay", cfg.eta_decay);
    cfg.grad_clip = get_or(kv, "grad_clip", cfg.grad_clip);
    cfg.alpha_th = get_or(kv, "alpha_th", cfg.alpha_th);
    cfg.t_max = get_or(kv, "t_max", cfg.t_max);
    cfg.d0_psnr = get_or(kv, "d0_psnr", cfg.d0_psnr);
    cfg.xi = get_or(kv, "xi", cfg.xi);
    cfg.batch_size = int(get_or(kv, "batch_size", cfg.batch_size));
    cfg.max_iters = int(get_or(kv, "max_iters", cfg.max_iters));
    cfg.min_iters = int(get_or(kv, "min_iters", cfg.min_iters));
    cfg.avg_window = int(get_or(kv, "avg_window", cfg.avg_window));
    return cfg;
}

PipelineConfig pipeline_config(const CommonOpts& opts,
                               const std::map<std::string, std::string>& kv) {
    // Explicit flags beat the config file, which beats the defaults.
    PipelineConfig cfg;
    cfg.extractor.block_size =
        opts.block_size_set ? opts.block_size : uint32_t(get_or(kv, "block_size", opts.block_size));
    cfg.extractor.scale_window = opts.scale_window_set
                                     ? opts.scale_window
                                     : uint32_t(get_or(kv, "scale_window", opts.scale_window));
    cfg.hvs.gamma2 = opts.gamma2_set ? opts.gamma2 : get_or(kv, "gamma2", opts.gamma2);
    cfg.include_mask_in_rate = opts.include_mask_rate;
    if (!opts.profiles_path.empty()) cfg.profiles = load_profile_table(opts.profiles_path);
    if (!opts.class_maps_path.empty() || !opts.class_weights_path.empty()) {
        if (opts.class_maps_path.empty() || opts.class_weights_path.empty())
            throw Error("--class-maps and --class-weights must be given together");
        cfg.class_model = std::make_shared<ClassModel>(
            load_class_model(opts.class_maps_path, opts.class_weights_path));
    }
    return cfg;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid generative semantic communication simulator"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    CommonOpts opts;
    app.add_option("--seed", opts.seed, "global random seed");
    app.add_option("--config", opts.config_path, "key = value configuration file");
    app.add_option("--profiles", opts.profiles_path, "coder profile table (csv)");
    app.add_option("--block-size", opts.block_size, "transform block size")
        ->each([&](const std::string&) { opts.block_size_set = true; });
    app.add_option("--scale-window", opts.scale_window, "scale estimation window")
        ->each([&](const std::string&) { opts.scale_window_set = true; });
    app.add_option("--gamma2", opts.gamma2, "visual noise variance")
        ->each([&](const std::string&) { opts.gamma2_set = true; });
    app.add_option("--class-maps", opts.class_maps_path, "backbone feature maps (.gvtf)");
    app.add_option("--class-weights", opts.class_weights_path, "per-class weight table");
    app.add_flag("--include-mask-rate", opts.include_mask_rate,
                 "count mask bits toward the rate");

    auto* enc = app.add_subcommand("encode", "encode an image into a payload");
    std::string enc_input, enc_out, enc_prompt;
    int enc_profile = 1;
    double enc_alpha = 0.0;
    enc->add_option("--input", enc_input, "input image (.ppm)")->required();
    enc->add_option("--out", enc_out, "output payload path")->required();
    enc->add_option("--profile", enc_profile, "coder profile id");
    enc->add_option("--alpha", enc_alpha, "filtering threshold");
    enc->add_option("--prompt", enc_prompt, "text prompt carried as metadata");

    auto* dec = app.add_subcommand("decode", "decode a payload into images");
    std::string dec_input, dec_prefix;
    dec->add_option("--input", dec_input, "payload path")->required();
    dec->add_option("--out-prefix", dec_prefix, "output path prefix")->required();

    auto* gv = app.add_subcommand("gvif", "fidelity report for one image");
    std::string gv_input, gv_csv;
    int gv_profile = 1;
    double gv_alpha = 0.0;
    gv->add_option("--input", gv_input, "input image (.ppm)")->required();
    gv->add_option("--profile", gv_profile, "coder profile id");
    gv->add_option("--alpha", gv_alpha, "filtering threshold");
    gv->add_option("--csv", gv_csv, "append the report as a csv row");

    auto* opt = app.add_subcommand("optimize", "channel-adaptive threshold/profile search");
    std::string opt_dataset, opt_out;
    double opt_snr_db = 10.0, opt_bw = 1e6, opt_tmax_ms = 20.0, opt_d0 = 30.0;
    opt->add_option("--dataset", opt_dataset, "dataset directory")->required();
    opt->add_option("--out", opt_out, "report csv path");
    opt->add_option("--snr-db", opt_snr_db, "receive SNR in dB");
    opt->add_option("--bandwidth-hz", opt_bw, "channel bandwidth");
    opt->add_option("--t-max-ms", opt_tmax_ms, "latency budget in ms");
    opt->add_option("--d0-psnr", opt_d0, "minimum nominal PSNR (distortion bound)");

    auto* sw = app.add_subcommand("sweep", "optimizer-in-the-loop SNR sweep");
    std::string sw_dataset, sw_out, sw_grid = "-2,1,4,7,10,13";
    double sw_bw = 1e6, sw_tmax_ms = 20.0, sw_d0 = 30.0;
    sw->add_option("--dataset", sw_dataset, "dataset directory")->required();
    sw->add_option("--out", sw_out, "output csv path")->required();
    sw->add_option("--snr-grid-db", sw_grid, "comma-separated SNR grid in dB");
    sw->add_option("--bandwidth-hz", sw_bw, "channel bandwidth");
    sw->add_option("--t-max-ms", sw_tmax_ms, "latency budget in ms");
    sw->add_option("--d0-psnr", sw_d0, "minimum nominal PSNR");

    auto* va = app.add_subcommand("validate-appendix-a",
                                  "paired-sample correlation check of the generation model");
    std::string va_dataset, va_out;
    double va_alpha = 0.5;
    size_t va_samples = 10000;
    va->add_option("--dataset", va_dataset, "dataset directory")->required();
    va->add_option("--alpha", va_alpha, "threshold defining the anchored set");
    va->add_option("--samples", va_samples, "number of paired samples");
    va->add_option("--out", va_out, "write the report to a file");

    auto* gs = app.add_subcommand("gen-synthetic", "write a seeded synthetic dataset");
    std::string gs_out;
    size_t gs_count = 32;
    uint32_t gs_w = 64, gs_h = 64;
    gs->add_option("--out", gs_out, "output directory")->required();
    gs->add_option("--count", gs_count, "number of scenes");
    gs->add_option("--width", gs_w, "scene width");
    gs->add_option("--height", gs_h, "scene height");

    auto* cal = app.add_subcommand("calibrate-profiles",
                                   "measure per-profile PSNR and write a profile table");
    std::string cal_dataset, cal_out;
    cal->add_option("--dataset", cal_dataset, "dataset directory")->required();
    cal->add_option("--out", cal_out, "output table path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> kv;
        if (!opts.config_path.empty()) kv = load_config(opts.config_path);
        const PipelineConfig cfg = pipeline_config(opts, kv);

        if (*enc) {
            const ImageTensor img = load_ppm(enc_input);
            const Payload p =
                encode_image(img, cfg.profiles.by_id(enc_profile), enc_alpha, cfg, enc_prompt);
            write_file(enc_out, p.bytes);
            const Payload::Meta m = p.parse_meta();
            std::printf("payload %s: %zu bytes (features %zu, side %zu, mask %zu bits)\n",
                        enc_out.c_str(), p.bytes.size(), m.feature_bits, m.side_bits,
                        m.mask_bits);
        } else if (*dec) {
            Payload p{read_file(dec_input)};
            const DecodeResult res = decode_payload(p, cfg, opts.seed);
            save_ppm(dec_prefix + "_hat.ppm", res.x_hat);
            save_ppm(dec_prefix + "_tilde.ppm", res.x_tilde);
            save_pgm(dec_prefix + "_mask.pgm", res.pixel_mask);
            std::printf("decoded %s -> %s_{hat,tilde}.ppm, %s_mask.pgm\n", dec_input.c_str(),
                        dec_prefix.c_str(), dec_prefix.c_str());
        } else if (*gv) {
            const ImageTensor img = load_ppm(gv_input);
            const CoderProfile& prof = cfg.profiles.by_id(gv_profile);
            const GvifReport rep = pipeline_gvif(img, prof, gv_alpha, cfg);
            const Payload p = encode_image(img, prof, gv_alpha, cfg);
            const DecodeResult res = decode_payload(p, cfg, opts.seed);
            const Payload::Meta m = p.parse_meta();
            const double rate_bits =
                double(m.feature_bits + m.side_bits) +
                (cfg.include_mask_in_rate ? double(m.mask_bits) : 0.0);
            double psnr = std::nan("");
            if (res.pixel_mask.count() > 0) psnr = mask_psnr(img, res.x_hat, res.pixel_mask);

            std::printf("image_id=%s\nprofile_id=%d\nalpha=%.6g\ngvif=%.10g\n", gv_input.c_str(),
                        prof.id, gv_alpha, rep.value);
            std::printf("numerator_bits=%.10g\ndenominator_bits=%.10g\n", rep.numerator_bits,
                        rep.denominator_bits);
            std::printf("mask_psnr_db=%.10g\nrate_bits=%.10g\n", psnr, rate_bits);
            if (!gv_csv.empty()) {
                char row[512];
                std::snprintf(row, sizeof row, "%s,%d,%.6g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                              std::filesystem::path(gv_input).stem().string().c_str(), prof.id,
                              gv_alpha, rep.value, rep.numerator_bits, rep.denominator_bits, psnr,
                              rate_bits);
                std::ofstream f(gv_csv, std::ios::app);
                f << row;
            }
        } else if (*opt) {
            OptimizerConfig ocfg = optimizer_from_config(kv);
            ocfg.t_max = opt_tmax_ms / 1000.0;
            ocfg.d0_psnr = opt_d0;
            ocfg.seed = opts.seed;
            const Dataset ds = load_dataset_dir(opt_dataset);
            const EvalOracle oracle = make_pipeline_oracle(ds, cfg);
            const ChannelState ch{snr_db_to_linear(opt_snr_db), opt_bw};
            const SelectionResult sel = select_profile(cfg.profiles, oracle, capacity(ch), ocfg);

            std::string csv =
                "profile_id,alpha_star,expected_gvif,expected_bits,iterations,feasible\n";
            for (const auto& r : sel.report) {
                char row[256];
                std::snprintf(row, sizeof row, "%d,%.10g,%.10g,%.10g,%d,%d\n", r.profile_id,
                              r.alpha_star, r.expected_gvif, r.expected_bits, r.iterations,
                              int(r.feasible));
                csv += row;
            }
            if (!opt_out.empty()) write_text(opt_out, csv);
            std::printf("selected profile %d at alpha = %.4f (expected GVIF %.4f)\n",
                        sel.profile.id, sel.alpha_star, sel.expected_gvif);
            if (opt_out.empty()) std::fputs(csv.c_str(), stdout);
        } else if (*sw) {
            OptimizerConfig ocfg = optimizer_from_config(kv);
            ocfg.t_max = sw_tmax_ms / 1000.0;
            ocfg.d0_psnr = sw_d0;
            ocfg.seed = opts.seed;
            const Dataset ds = load_dataset_dir(sw_dataset);
            const auto rows = run_snr_sweep(ds, parse_grid(sw_grid), sw_bw, ocfg, cfg, opts.seed);
            write_text(sw_out, sweep_to_csv(rows));
            std::printf("wrote %zu sweep rows to %s\n", rows.size(), sw_out.c_str());
        } else if (*va) {
            const Dataset ds = load_dataset_dir(va_dataset);
            const FeatureTensor y = extract_features(ds.images[0], cfg.extractor);
            const FilterSet set =
                build_filter_set(pipeline_importance(y, cfg), va_alpha, y.shape().c);
            const auto rep = validate_generation_independence(ds, set, va_samples, cfg, opts.seed);
            std::string text;
            char line[160];
            std::snprintf(line, sizeof line, "samples=%zu\n", rep.samples);
            text += line;
            std::snprintf(line, sizeof line, "inside_positions=%zu\n", rep.inside_positions);
            text += line;
            std::snprintf(line, sizeof line, "outside_positions=%zu\n", rep.outside_positions);
            text += line;
            std::snprintf(line, sizeof line, "inside_mean_corr=%.6f\n", rep.inside_mean);
            text += line;
            std::snprintf(line, sizeof line, "outside_mean_abs_corr=%.6f\n", rep.outside_mean_abs);
            text += line;
            std::snprintf(line, sizeof line, "outside_max_abs_corr=%.6f\n", rep.outside_max_abs);
            text += line;
            std::fputs(text.c_str(), stdout);
            if (!va_out.empty()) write_text(va_out, text);
        } else if (*gs) {
            const Dataset ds =
                generate_synthetic_dataset(gs_count, gs_w, gs_h, opts.seed, cfg.extractor);
            save_dataset_dir(ds, gs_out);
            std::printf("wrote %zu scenes to %s\n", ds.size(), gs_out.c_str());
        } else if (*cal) {
            const Dataset ds = load_dataset_dir(cal_dataset);
            const ProfileTable measured = calibrate_profiles(ds, cfg);
            save_profile_table(cal_out, measured);
            std::printf("wrote measured table (%zu profiles) to %s\n", measured.size(),
                        cal_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#include "gvsc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gvsc {

double OptimizerConfig::effective_penalty(double capacity_bps) const {
    if (penalty_abs > 0) return penalty_abs;
    const double budget = capacity_bps * t_max;
    if (!(budget > 0)) throw InfeasibleError("zero bit budget: penalty is undefined");
    return penalty_scale / (budget * budget);
}

void OptimizerConfig::validate() const {
    if (!(penalty_scale > 0) && !(penalty_abs > 0))
        throw std::invalid_argument("penalty must be positive");
    if (!(nu > 0)) throw std::invalid_argument("nu must be positive");
    if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
    if (!(alpha_th >= 0 && alpha_th <= 1)) throw std::invalid_argument("alpha_th must be in [0,1]");
    if (!(t_max > 0)) throw std::invalid_argument("t_max must be positive");
    if (!(xi > 0)) throw std::invalid_argument("xi must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
}

double penalty_objective(double /*alpha*/, double mean_gvif, double mean_bits,
                         double capacity_bps, const OptimizerConfig& cfg) {
    const double p = cfg.effective_penalty(capacity_bps);
    const double k = mean_bits - capacity_bps * cfg.t_max;
    const double over = std::max(0.0, k);
    return -mean_gvif + p * over * over;
}

double zero_order_estimate(const std::function<double(double)>& f, double alpha, double nu,
                           double m) {
    if (!(nu > 0)) throw std::invalid_argument("nu must be positive");
    return (f(alpha + nu * m) - f(alpha)) / nu * m;
}

GradientEstimate estimate_gradient(double alpha, const std::vector<size_t>& batch,
                                   const CoderProfile& profile, const EvalOracle& oracle,
                                   const OptimizerConfig& cfg, double capacity_bps,
                                   uint64_t seed) {
    if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
    Rng rng(seed);
    GradientEstimate est;
    est.m = rng.next_symmetric();  // one perturbation shared across the batch

    const double probe = alpha + cfg.nu * est.m;
    double g0 = 0, g1 = 0, b0 = 0, b1 = 0;
    for (size_t idx : batch) {
        g0 += oracle.gvif_of(profile, alpha, idx);
        g1 += oracle.gvif_of(profile, probe, idx);
        b0 += oracle.bits_of(profile, alpha, idx);
        b1 += oracle.bits_of(profile, probe, idx);
    }
    const double inv = 1.0 / double(batch.size());
    g0 *= inv;
    g1 *= inv;
    b0 *= inv;
    b1 *= inv;

    est.grad_g = (g1 - g0) / cfg.nu * est.m;
    est.grad_k = (b1 - b0) / cfg.nu * est.m;
    est.g_mean = g0;
    est.k_mean = b0 - capacity_bps * cfg.t_max;

    const double p = cfg.effective_penalty(capacity_bps);
    est.grad_l = -est.grad_g + 2.0 * p * std::max(0.0, est.k_mean) * est.grad_k;
    return est;
}

namespace {

std::vector<size_t> pick_batch(size_t dataset_size, int batch_size, uint64_t seed) {
    std::vector<size_t> all(dataset_size);
    std::iota(all.begin(), all.end(), size_t{0});
    if (dataset_size <= size_t(batch_size)) return all;
    Rng rng(seed);
    for (size_t i = 0; i < size_t(batch_size); ++i) {
        const size_t j = i + size_t(rng.next_u64() % (dataset_size - i));
        std::swap(all[i], all[j]);
    }
    all.resize(size_t(batch_size));
    return all;
}

}  // namespace

ThresholdResult optimize_threshold(const CoderProfile& profile, const EvalOracle& oracle,
                                   double capacity_bps, const OptimizerConfig& cfg,
                                   const GradientOverride& exact_gradient) {
    cfg.validate();
    if (!(capacity_bps > 0)) throw InfeasibleError("channel capacity is zero");
    if (oracle.dataset_size == 0) throw std::invalid_argument("dataset is empty");

    const double p = cfg.effective_penalty(capacity_bps);
    const double budget = capacity_bps * cfg.t_max;

    ThresholdResult res;
    double alpha = 0.5;
    alpha = std::clamp(alpha, 0.0, cfg.alpha_th);

    std::vector<double> history;
    history.reserve(size_t(cfg.max_iters) + 1);
    int small_steps = 0;
    const int need_small = std::max(1, cfg.avg_window);

    for (int t = 0; t < cfg.max_iters; ++t) {
        const auto batch =
            pick_batch(oracle.dataset_size, cfg.batch_size, derive_seed(cfg.seed, profile.id, t, 1));

        GradientEstimate est;
        if (exact_gradient) {
            double g0 = 0, b0 = 0;
            for (size_t idx : batch) {
                g0 += oracle.gvif_of(profile, alpha, idx);
                b0 += oracle.bits_of(profile, alpha, idx);
            }
            g0 /= double(batch.size());
            b0 /= double(batch.size());
            const auto [gg, gk] = exact_gradient(alpha);
            est.grad_g = gg;
            est.grad_k = gk;
            est.g_mean = g0;
            est.k_mean = b0 - budget;
            est.grad_l = -gg + 2.0 * p * std::max(0.0, est.k_mean) * gk;
        } else {
            est = estimate_gradient(alpha, batch, profile, oracle, cfg, capacity_bps,
                                    derive_seed(cfg.seed, profile.id, t, 2));
        }

        const double over = std::max(0.0, est.k_mean);
        res.trace.push_back({t, alpha, est.g_mean, est.k_mean, -est.g_mean + p * over * over});

        const double grad = std::clamp(est.grad_l, -cfg.grad_clip, cfg.grad_clip);
        const double eta_t = cfg.eta / (1.0 + cfg.eta_decay * t);
        const double next = std::clamp(alpha - eta_t * grad, 0.0, cfg.alpha_th);

        small_steps = (std::abs(next - alpha) < cfg.xi) ? small_steps + 1 : 0;
        alpha = next;
        history.push_back(alpha);
        res.iterations = t + 1;

        if (t + 1 >= cfg.min_iters && small_steps >= need_small) {
            res.converged = true;
            break;
        }
    }

    // Trailing average damps the zero-order walk.
    const size_t window = std::min(history.size(), size_t(std::max(1, cfg.avg_window)));
    double acc = 0;
    for (size_t i = history.size() - window; i < history.size(); ++i) acc += history[i];
    res.alpha_star = std::clamp(acc / double(window), 0.0, cfg.alpha_th);
    return res;
}

namespace {

double mean_over_dataset(
    const std::function<double(const CoderProfile&, double, size_t)>& f,
    const CoderProfile& prof, double alpha, size_t n) {
    double acc = 0;
    for (size_t i = 0; i < n; ++i) acc += f(prof, alpha, i);
    return acc / double(n);
}

// The quadratic penalty admits small constraint violations; the terminal
// restoration raises alpha to the smallest value whose expected rate fits
// the budget. Returns a negative value when even alpha_th does not fit.
double restore_feasibility(const CoderProfile& prof, const EvalOracle& oracle, double budget,
                           double alpha0, double alpha_th) {
    auto mean_bits = [&](double a) {
        return mean_over_dataset(oracle.bits_of, prof, a, oracle.dataset_size);
    };
    if (mean_bits(alpha0) <= budget) return alpha0;
    if (mean_bits(alpha_th) > budget) return -1.0;
    double lo = alpha0, hi = alpha_th;  // lo infeasible, hi feasible
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_bits(mid) <= budget ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

SelectionResult select_profile(const ProfileTable& profiles, const EvalOracle& oracle,
                               double capacity_bps, const OptimizerConfig& cfg) {
    cfg.validate();
    if (oracle.dataset_size == 0) throw std::invalid_argument("dataset is empty");
    const double budget = capacity_bps * cfg.t_max;

    std::vector<ProfileReport> report;
    bool any_feasible = false;
    const CoderProfile* best = nullptr;
    double best_gvif = 0, best_alpha = 0;

    for (const auto& prof : profiles.profiles()) {
        ProfileReport r;
        r.profile_id = prof.id;
        r.feasible = prof.nominal_psnr_db >= cfg.d0_psnr;
        if (r.feasible) {
            any_feasible = true;
            const auto opt = optimize_threshold(prof, oracle, capacity_bps, cfg);
            r.iterations = opt.iterations;
            const double alpha =
                restore_feasibility(prof, oracle, budget, opt.alpha_star, cfg.alpha_th);
            r.fits_budget = alpha >= 0;
            r.alpha_star = r.fits_budget ? alpha : cfg.alpha_th;
            r.expected_gvif =
                mean_over_dataset(oracle.gvif_of, prof, r.alpha_star, oracle.dataset_size);
            r.expected_bits =
                mean_over_dataset(oracle.bits_of, prof, r.alpha_star, oracle.dataset_size);
            // ">=" so ties fall to the cheaper (lower-rate) profile.
            if (r.fits_budget && (!best || r.expected_gvif >= best_gvif)) {
                best = &prof;
                best_gvif = r.expected_gvif;
                best_alpha = r.alpha_star;
            }
        }
        report.push_back(r);
    }

    if (!any_feasible)
        throw InfeasibleError("no profile satisfies the distortion bound D0 = " +
                              std::to_string(cfg.d0_psnr) + " dB");
    if (!best)
        throw InfeasibleError("latency budget of " + std::to_string(budget) +
                              " bits is unattainable at every feasible profile");

    SelectionResult sel;
    sel.profile = *best;
    sel.alpha_star = best_alpha;
    sel.expected_gvif = best_gvif;
    sel.report = std::move(report);
    return sel;
}

}  // namespace gvsc

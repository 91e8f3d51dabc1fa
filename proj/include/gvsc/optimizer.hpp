#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "gvsc/channel.hpp"
#include "gvsc/gsm.hpp"

namespace gvsc {

struct OptimizerConfig {
    // Quadratic penalty weight. The effective weight is
    // penalty_scale / (C * t_max)^2 unless penalty_abs > 0 overrides it;
    // the scaled form keeps the penalty dimensionless across budgets.
    double penalty_scale = 25.0;
    double penalty_abs = 0.0;

    double nu = 0.01;        // smoothing radius of the zero-order probe
    double eta = 0.05;       // base step size
    double eta_decay = 0.02; // eta_t = eta / (1 + eta_decay * t)
    double grad_clip = 10.0; // clamp on the combined gradient estimate
    double alpha_th = 0.8;   // projection upper bound
    double t_max = 0.02;     // latency budget, seconds
    double d0_psnr = 30.0;   // distortion bound as minimum nominal PSNR
    double xi = 1e-3;        // convergence tolerance on the averaged iterate
    int batch_size = 8;
    int max_iters = 200;
    int min_iters = 30;      // iterations before the stop rule may fire
    int avg_window = 25;     // trailing iterates averaged into the answer
    uint64_t seed = 1;

    double effective_penalty(double capacity_bps) const;
    void validate() const;
};

// Function evaluations the optimizer is allowed to make: the expected-GVIF
// and rate oracles over an indexed dataset. Deterministic per
// (profile, alpha, index).
struct EvalOracle {
    size_t dataset_size = 0;
    std::function<double(const CoderProfile&, double alpha, size_t index)> gvif_of;
    std::function<double(const CoderProfile&, double alpha, size_t index)> bits_of;
};

// L = -G + p * max(0, K)^2 with K = mean_bits - C * t_max.
double penalty_objective(double alpha, double mean_gvif, double mean_bits, double capacity_bps,
                         const OptimizerConfig& cfg);

// Single-function zero-order probe: (1/nu) * [f(alpha + nu m) - f(alpha)] * m.
// Over uniform m in [-1, 1] its expectation tends to f'(alpha) / 3.
double zero_order_estimate(const std::function<double(double)>& f, double alpha, double nu,
                           double m);

struct GradientEstimate {
    double grad_l = 0;  // combined: -grad_g + 2 p max(0, k_mean) grad_k
    double grad_g = 0;
    double grad_k = 0;
    double g_mean = 0;  // mean GVIF at alpha over the batch
    double k_mean = 0;  // mean bits at alpha minus budget
    double m = 0;       // perturbation used
};

// One shared perturbation per call, applied across the whole batch.
GradientEstimate estimate_gradient(double alpha, const std::vector<size_t>& batch,
                                   const CoderProfile& profile, const EvalOracle& oracle,
                                   const OptimizerConfig& cfg, double capacity_bps, uint64_t seed);

struct IterRecord {
    int t = 0;
    double alpha = 0;
    double g = 0;  // batch-mean GVIF estimate
    double k = 0;  // batch-mean bit excess
    double l = 0;  // penalized objective
};

struct ThresholdResult {
    double alpha_star = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<IterRecord> trace;
};

// Exact-gradient hook for regression tests: returns (grad_g, grad_k) at alpha.
using GradientOverride = std::function<std::pair<double, double>(double alpha)>;

// Projected stochastic descent on the penalized objective, initialized at
// alpha = 0.5. Iterates are projected onto [0, alpha_th]; the returned
// threshold is the trailing average of the final iterates, and the stop
// rule fires when that average moves by less than xi.
ThresholdResult optimize_threshold(const CoderProfile& profile, const EvalOracle& oracle,
                                   double capacity_bps, const OptimizerConfig& cfg,
                                   const GradientOverride& exact_gradient = nullptr);

struct ProfileReport {
    int profile_id = 0;
    double alpha_star = 0;
    double expected_gvif = 0;
    double expected_bits = 0;
    int iterations = 0;
    bool feasible = false;     // meets the distortion bound d0
    bool fits_budget = false;  // expected bits within C * t_max at alpha_star
};

struct SelectionResult {
    CoderProfile profile;
    double alpha_star = 0;
    double expected_gvif = 0;
    std::vector<ProfileReport> report;
};

// Restricts to profiles with nominal PSNR >= d0, optimizes the threshold per
// profile, restores feasibility (the quadratic penalty tolerates small
// violations, so alpha is raised to the smallest value meeting the budget),
// and picks the largest expected GVIF; ties break toward the lower-rate
// profile. Throws InfeasibleError when no profile passes d0, or when none
// fits the latency budget even at alpha_th.
SelectionResult select_profile(const ProfileTable& profiles, const EvalOracle& oracle,
                               double capacity_bps, const OptimizerConfig& cfg);

}  // namespace gvsc

#pragma once

#include <cmath>
#include <stdexcept>

#include "gvsc/common.hpp"

namespace gvsc {

struct ChannelState {
    double snr_linear = 1.0;    // |h|^2 / sigma^2
    double bandwidth_hz = 1e6;

    void validate() const {
        if (!(bandwidth_hz > 0)) throw std::invalid_argument("bandwidth must be positive");
        if (!(snr_linear >= 0)) throw std::invalid_argument("snr must be nonnegative");
    }
};

inline double snr_db_to_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

// C = B log2(1 + snr), bits per second.
inline double capacity(const ChannelState& ch) {
    ch.validate();
    return ch.bandwidth_hz * std::log2(1.0 + ch.snr_linear);
}

// T_x = R / C. Zero rate transmits instantly; zero capacity is infeasible.
inline double latency(double rate_bits, const ChannelState& ch) {
    if (!(rate_bits >= 0)) throw std::invalid_argument("rate must be nonnegative");
    if (rate_bits == 0) return 0.0;
    const double c = capacity(ch);
    if (c <= 0)
        throw InfeasibleError("zero channel capacity with nonzero rate: latency is unbounded");
    return rate_bits / c;
}

// Bits deliverable within t_max seconds.
inline double bit_budget(const ChannelState& ch, double t_max) {
    if (!(t_max >= 0)) throw std::invalid_argument("t_max must be nonnegative");
    return capacity(ch) * t_max;
}

}  // namespace gvsc

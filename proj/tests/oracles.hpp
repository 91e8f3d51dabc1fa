#pragma once

// Independent reference computations used to freeze expected values.
// Everything here deliberately avoids the library's own code paths.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// Composite-Simpson quadrature of the N(0, theta^2) density over [a, b].
inline double gaussian_mass_quadrature(double a, double b, double theta, int n = 4000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    auto pdf = [theta](double t) {
        return std::exp(-t * t / (2.0 * theta * theta)) / (theta * std::sqrt(2.0 * M_PI));
    };
    double acc = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i) acc += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Kahan-compensated sum, used so oracle summation differs from the
// implementation's plain accumulation.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0, c_ = 0;
};

// Mutual information of a Gaussian channel, entropy-difference route:
// h(signal + noise) - h(noise) with h in bits.
inline double gaussian_channel_mi_bits(double signal_std, double noise_var) {
    const double h_out = 0.5 * std::log2(2.0 * M_PI * M_E * (signal_std * signal_std + noise_var));
    const double h_noise = 0.5 * std::log2(2.0 * M_PI * M_E * noise_var);
    return h_out - h_noise;
}

// Sample Pearson correlation.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracles

#pragma once

// Independent closed forms and brute-force references used to freeze
// expected values. Everything here is derived from textbook identities,
// not from the code under test.

#include <cmath>
#include <vector>

namespace oracles {

inline constexpr double kPi = 3.14159265358979323846;

/// E max(N(0, v), 0) = sqrt(v / (2 pi)).
inline double gaussian_call(double variance) {
    return std::sqrt(variance / (2.0 * kPi));
}

/// E |N(0, v)| = sqrt(2 v / pi).
inline double gaussian_abs(double variance) {
    return std::sqrt(2.0 * variance / kPi);
}

/// E sup_{[0,T]} of a Brownian motion with terminal variance v: by the
/// reflection principle the sup is |N(0, v)|.
inline double brownian_sup_mean(double variance) {
    return gaussian_abs(variance);
}

/// E |S_k| for the symmetric +-1 random walk, via binomial weights.
inline double abs_walk_moment(int k) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) {
        double logw = std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0) -
                      k * std::log(2.0);
        s += std::fabs(k - 2.0 * j) * std::exp(logw);
    }
    return s;
}

/// Spitzer's identity: E max(0, S_1, ..., S_n) = sum_k E S_k^+ / k, with
/// E S_k^+ = E |S_k| / 2 for symmetric walks. `step` scales the walk.
inline double discrete_max_mean_binomial(int n, double step) {
    double acc = 0.0;
    for (int k = 1; k <= n; ++k)
        acc += abs_walk_moment(k) / (2.0 * k);
    return acc * step;
}

/// Same with Gaussian increments of standard deviation `step` per step:
/// E S_k^+ = step sqrt(k / (2 pi)).
inline double discrete_max_mean_gaussian(int n, double step) {
    double acc = 0.0;
    for (int k = 1; k <= n; ++k)
        acc += std::sqrt(static_cast<double>(k) / (2.0 * kPi)) / k;
    return acc * step;
}

/// Central moments of N(0, v): E X^2 = v, E X^4 = 3 v^2, E X^6 = 15 v^3.
inline double gaussian_even_moment(int order, double variance) {
    double df = 1.0; // (2n-1)!!
    for (int i = 2 * order - 1; i > 1; i -= 2)
        df *= i;
    double out = df;
    for (int i = 0; i < order; ++i)
        out *= variance;
    return out;
}

} // namespace oracles

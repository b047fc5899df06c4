#pragma once

#include <cmath>
#include <string>

#include "tfrp/bessel.hpp"
#include "tfrp/errors.hpp"

namespace tfrp {

// Tempered fractional Brownian motion: variance coefficient and covariance.
//
// The process B^{H,lambda} is centered Gaussian with
//   E[B_s B_t] = (1/2) [ C_t^2 |t|^{2H} + C_s^2 |s|^{2H} - C_{t-s}^2 |t-s|^{2H} ],
// where the coefficient has the closed form
//   C_t^2 = 2 Gamma(2H) / ((2 lambda)^{2H} t^{2H})
//         - 2 Gamma(H+1/2) / (sqrt(pi) (2 lambda)^H t^H) K_H(lambda t),
// with C_0^2 = 0. Both terms diverge like t^{-2H} as t -> 0 and cancel to a
// finite limit; below kSmallTimeFloor the conventional value 0 is returned
// (the variance C_t^2 t^{2H} vanishes there regardless).

inline constexpr double kSmallTimeFloor = 1e-8;

struct TfbmParams {
    double hurst;
    double lambda;
};

inline void validate_tfbm_params(double hurst, double lambda) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw DomainError("tfbm: Hurst index must lie in (0,1), got " + std::to_string(hurst));
    if (!(lambda > 0.0))
        throw DomainError("tfbm: tempering rate must be positive, got " + std::to_string(lambda));
}

/// C_t^2 for t >= 0 (exactly 0 at t = 0 and below the small-time floor).
inline double tempering_coefficient(double hurst, double lambda, double t) {
    validate_tfbm_params(hurst, lambda);
    if (t < 0.0) throw DomainError("tempering_coefficient: t must be nonnegative");
    if (t < kSmallTimeFloor) return 0.0;
    const double lt = lambda * t;
    // Evaluate the two diverging terms in log space and subtract once.
    const double log_first =
        std::log(2.0) + std::lgamma(2.0 * hurst) - 2.0 * hurst * std::log(2.0 * lambda * t);
    const double log_pre = std::log(2.0) + std::lgamma(hurst + 0.5) - 0.5 * std::log(M_PI) -
                           hurst * std::log(2.0 * lambda * t);
    const double kh = bessel_k(hurst, lt);
    const double value = std::exp(log_first) - std::exp(log_pre) * kh;
    return value > 0.0 ? value : 0.0;
}

/// Variance of B_t: C_t^2 |t|^{2H} (even in t).
inline double tfbm_variance(double hurst, double lambda, double t) {
    const double at = std::abs(t);
    if (at < kSmallTimeFloor) return 0.0;
    return tempering_coefficient(hurst, lambda, at) * std::pow(at, 2.0 * hurst);
}

/// E[B_s B_t] for s, t >= 0.
inline double tfbm_covariance(double hurst, double lambda, double s, double t) {
    if (s < 0.0 || t < 0.0) throw DomainError("tfbm_covariance: times must be nonnegative");
    return 0.5 * (tfbm_variance(hurst, lambda, t) + tfbm_variance(hurst, lambda, s) -
                  tfbm_variance(hurst, lambda, t - s));
}

}  // namespace tfrp

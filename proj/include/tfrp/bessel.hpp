#pragma once

#include <cmath>
#include <string>

#include "tfrp/errors.hpp"
#include "tfrp/quadrature.hpp"

namespace tfrp {

// Modified Bessel function of the second kind,
//   K_v(z) = \int_0^\infty e^{-z cosh x} cosh(v x) dx,  z > 0,
// evaluated by adaptive Gauss-Kronrod quadrature. Even in v. Orders |v| <= 4
// and z in (1e-6, ~50) are the supported regime; that covers every order the
// tempered-covariance derivative/recurrence chain reaches (H-4 .. H+1).

namespace detail {

inline double log_cosh(double u) {
    u = std::abs(u);
    return (u > 30.0) ? u - M_LN2 : std::log(std::cosh(u));
}

// Truncation point for the scaled integrand f(x) = exp(-z(cosh x - 1)) cosh(vx):
// cut where log f falls 1e-18 below the running peak.
inline double bessel_k_cutoff(double v, double z) {
    const double av = std::abs(v);
    const double drop = std::log(1e-18);
    double peak = 0.0;  // log f(0) = 0
    for (double x = 0.5; x < 120.0; x += 0.5) {
        const double log_f = -z * (std::cosh(x) - 1.0) + log_cosh(av * x);
        peak = std::max(peak, log_f);
        if (log_f < peak + drop) return x;
    }
    return 120.0;
}

}  // namespace detail

/// K_v(z) by adaptive quadrature of the integral representation.
inline double bessel_k(double v, double z) {
    if (!(z > 0.0)) throw DomainError("bessel_k: argument must be positive, got z=" + std::to_string(z));
    const double av = std::abs(v);  // K_{-v} = K_v, integrand even in v
    if (av > 4.0 + 1e-12) throw DomainError("bessel_k: |v| <= 4 supported, got v=" + std::to_string(v));
    const double cut = detail::bessel_k_cutoff(av, z);
    // Scale out e^{-z} so the integrand is O(1) at the origin for large z.
    auto f = [av, z](double x) {
        return std::exp(-z * (std::cosh(x) - 1.0) + detail::log_cosh(av * x));
    };
    auto r = integrate_adaptive(f, 0.0, cut, 1e-14, 0.0, 4000);
    if (!r.converged)
        throw NumericError("bessel_k: quadrature failed to converge (v=" + std::to_string(v) +
                               ", z=" + std::to_string(z) + ", err=" + std::to_string(r.error_estimate) + ")",
                           r.error_estimate);
    return std::exp(-z) * r.value;
}

/// K_{1/2}(z) = K_{-1/2}(z) = sqrt(pi/(2z)) e^{-z}; K_{3/2} adds (1 + 1/z).
inline double bessel_k_half(double z) { return std::sqrt(M_PI / (2.0 * z)) * std::exp(-z); }
inline double bessel_k_three_halves(double z) { return bessel_k_half(z) * (1.0 + 1.0 / z); }

/// Residual of d/dz (z^v K_v(z)) = -z^v K_{v-1}(z), probed with a central
/// difference of step h. Second order in h on the smooth region.
inline double bessel_k_derivative_identity_residual(double v, double z, double h) {
    if (!(z > h && h > 0.0)) throw DomainError("bessel_k_derivative_identity_residual: need z > h > 0");
    auto g = [v](double x) { return std::pow(x, v) * bessel_k(v, x); };
    const double lhs = (g(z + h) - g(z - h)) / (2.0 * h);
    const double rhs = -std::pow(z, v) * bessel_k(v - 1.0, z);
    return std::abs(lhs - rhs);
}

/// Relative residual of K_{v-1}(z) = K_{v+1}(z) - (2v/z) K_v(z).
inline double bessel_k_recurrence_residual(double v, double z) {
    const double km1 = bessel_k(v - 1.0, z);
    const double kp1 = bessel_k(v + 1.0, z);
    const double kv = bessel_k(v, z);
    return std::abs(km1 - kp1 + (2.0 * v / z) * kv) / kp1;
}

// Strict upper bounds on K_v (used by the covariance decay estimates):
//   v in (1/2, 3/2): K_v(x) < sqrt(pi/2) (1+1/x)^v e^{-x} / sqrt(x+1)
//   v in (0, 1/2):   K_v(x) < 2^{v-1} Gamma(v) (1+1/x)^v e^{-x} / sqrt(x+1)
inline double bessel_k_bound_mid(double v, double x) {
    return std::sqrt(M_PI / 2.0) * std::pow(1.0 + 1.0 / x, v) * std::exp(-x) / std::sqrt(x + 1.0);
}
inline double bessel_k_bound_low(double v, double x) {
    return std::pow(2.0, v - 1.0) * std::tgamma(v) * std::pow(1.0 + 1.0 / x, v) * std::exp(-x) /
           std::sqrt(x + 1.0);
}

}  // namespace tfrp

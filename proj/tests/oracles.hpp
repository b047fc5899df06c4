#pragma once

// Test-side oracles, deliberately independent of the library's production
// paths: a plain adaptive Simpson rule, direct integral representations, and
// exhaustive partition enumeration.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson(f, a, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// K_v(z) = int_0^inf e^{-z cosh x} cosh(vx) dx by adaptive Simpson. The
/// tolerance is scaled by a crude mass estimate so it stays meaningful for
/// large orders, where the integrand peaks far above e^{-z}.
inline double bessel_k(double v, double z) {
    const double av = std::abs(v);
    auto f = [av, z](double x) { return std::exp(-z * std::cosh(x)) * std::cosh(av * x); };
    double cut = 1.0, peak = f(0.0);
    while (cut < 100.0) {
        peak = std::max(peak, f(cut));
        if (f(cut) <= 1e-22 * peak) break;
        cut += 1.0;
    }
    return adaptive_simpson(f, 0.0, cut, 1e-13 * peak * std::min(cut, 4.0), 30);
}

/// C_t^2 as the kernel-square integral
///   int_R [ e^{-lam t (1-x)_+} (1-x)_+^{-a} - e^{-lam t (-x)_+} (-x)_+^{-a} ]^2 dx,
/// a = 1/2 - H. Split into the three power-substituted smooth pieces.
inline double ct2_integral(double hurst, double lambda, double t) {
    const double a = 0.5 - hurst;
    const double lt = lambda * t;
    // piece 1: x in (0,1): int_0^1 e^{-2 lt u} u^{-2a} du, u = w^{1/(1-2a)}
    const double e1 = 1.0 / (1.0 - 2.0 * a);
    auto p1 = [&](double w) { return std::exp(-2.0 * lt * std::pow(w, e1)) * e1; };
    const double I1 = adaptive_simpson(p1, 0.0, 1.0, 1e-13);
    // pieces over x < 0 (s = -x > 0): A = e^{-lt(1+s)}(1+s)^{-a}, B = e^{-lt s} s^{-a}
    auto A = [&](double s) { return std::exp(-lt * (1.0 + s)) * std::pow(1.0 + s, -a); };
    // tail cut where both kernels are negligible
    double S = 1.0;
    while (S < 1e7 && std::exp(-2.0 * lt * S) * std::pow(S, -2.0 * a) > 1e-22) S *= 1.5;
    // int A^2 ds (smooth)
    auto pA2 = [&](double s) { return A(s) * A(s); };
    const double IA2 = adaptive_simpson(pA2, 0.0, S, 1e-13);
    // int B^2 ds with s = w^{1/(1-2a)}
    auto pB2 = [&](double w) {
        const double s = std::pow(w, e1);
        return std::exp(-2.0 * lt * s) * e1;
    };
    const double IB2 = adaptive_simpson(pB2, 0.0, std::pow(S, 1.0 - 2.0 * a), 1e-13);
    // int A B ds with s = w^{1/(1-a)}
    const double e2 = 1.0 / (1.0 - a);
    auto pAB = [&](double w) {
        const double s = std::pow(w, e2);
        return A(s) * std::exp(-lt * s) * e2;
    };
    const double IAB = adaptive_simpson(pAB, 0.0, std::pow(S, 1.0 - a), 1e-13);
    return I1 + IA2 + IB2 - 2.0 * IAB;
}

/// sup over ALL partitions (exhaustive, 2^{n-2} subsets) of sum |inc|^q.
inline double brute_force_variation(const std::function<double(std::size_t, std::size_t)>& norm,
                                    std::size_t first, std::size_t last, double q) {
    const std::size_t n = last - first;
    if (n == 0) return 0.0;
    double best = 0.0;
    const std::uint64_t combos = std::uint64_t(1) << (n - 1);  // interior points on/off
    for (std::uint64_t mask = 0; mask < combos; ++mask) {
        double acc = 0.0;
        std::size_t prev = first;
        for (std::size_t i = 1; i < n; ++i)
            if (mask & (std::uint64_t(1) << (i - 1))) {
                acc += std::pow(norm(prev, first + i), q);
                prev = first + i;
            }
        acc += std::pow(norm(prev, last), q);
        best = std::max(best, acc);
    }
    return std::pow(best, 1.0 / q);
}

/// Classical RK4 for dy/dt = f(y) with fixed step count.
inline std::vector<double> rk4(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                               std::vector<double> y, double t0, double t1, int steps) {
    const double h = (t1 - t0) / steps;
    const std::size_t d = y.size();
    for (int s = 0; s < steps; ++s) {
        const auto k1 = f(y);
        std::vector<double> tmp(d);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        const auto k2 = f(tmp);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        const auto k3 = f(tmp);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
        const auto k4 = f(tmp);
        for (std::size_t i = 0; i < d; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

}  // namespace oracle

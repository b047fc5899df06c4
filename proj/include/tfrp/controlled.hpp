#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tfrp/errors.hpp"
#include "tfrp/signature.hpp"
#include "tfrp/variation.hpp"

namespace tfrp {

// Controlled paths (y, y', y'') over a fixed rough path, their remainders and
// the compensated rough integral. Index conventions: the driver lives in R^m;
// y' maps R^m -> R^d, stored y1[a*m + i]; y'' maps R^m (x) R^m -> R^d, stored
// y2[(a*m + i1)*m + i2], contracting X2/X3 over their leading slots.

/// Smooth diffusion field g: R^d -> L(R^m, R^out) with bounded derivatives to
/// order three. Tensor layouts (row-major):
///   value [a*m + i], deriv1 [(a*m+i)*d + b], deriv2 [((a*m+i)*d + b)*d + c],
///   deriv3 [(((a*m+i)*d + b)*d + c)*d + e].
struct SmoothField {
    int state_dim = 0;   // d
    int driver_dim = 0;  // m
    int out_dim = 0;     // rows of g (== state_dim for RDE fields)
    double bound = 0.0;  // C_g, common sup bound on g and its derivatives
    std::function<void(const double*, double*)> value;
    std::function<void(const double*, double*)> deriv1;
    std::function<void(const double*, double*)> deriv2;
    std::function<void(const double*, double*)> deriv3;
};

/// Grid-based controlled path relative to `driver` (finest table grid).
struct ControlledPath {
    int value_dim = 0;   // d
    int driver_dim = 0;  // m
    const SignatureTable* driver = nullptr;
    std::vector<double> y;   // points x d
    std::vector<double> y1;  // points x (d*m)
    std::vector<double> y2;  // points x (d*m*m)

    std::size_t point_count() const {
        return value_dim == 0 ? 0 : y.size() / std::size_t(value_dim);
    }
    const double* y_at(std::size_t k) const { return y.data() + k * std::size_t(value_dim); }
    const double* y1_at(std::size_t k) const {
        return y1.data() + k * std::size_t(value_dim) * driver_dim;
    }
    const double* y2_at(std::size_t k) const {
        return y2.data() + k * std::size_t(value_dim) * driver_dim * driver_dim;
    }
};

struct Remainders {
    std::vector<double> sharp;        // R^#_{s,t} in R^d
    std::vector<double> sharp_sharp;  // R^##_{s,t} in L(R^m, R^d)
};

/// R^#_{s,t} = y_{s,t} - y'_s x_{s,t} - y''_s X2_{s,t},
/// R^##_{s,t} = y'_{s,t} - y''_s x_{s,t}; grid indices i < j.
inline Remainders remainders(const ControlledPath& cp, std::size_t i, std::size_t j) {
    if (!cp.driver) throw DomainError("remainders: controlled path has no driver");
    if (j >= cp.point_count() || i > j) throw DomainError("remainders: indices off grid");
    const int d = cp.value_dim, m = cp.driver_dim;
    const TruncatedSignature sig = cp.driver->interval(i, j);
    Remainders out;
    out.sharp.assign(std::size_t(d), 0.0);
    out.sharp_sharp.assign(std::size_t(d) * m, 0.0);
    const double *yi = cp.y_at(i), *yj = cp.y_at(j);
    const double *y1i = cp.y1_at(i), *y1j = cp.y1_at(j);
    const double* y2i = cp.y2_at(i);
    for (int a = 0; a < d; ++a) {
        double r = yj[a] - yi[a];
        for (int i1 = 0; i1 < m; ++i1) r -= y1i[a * m + i1] * sig.x1(i1);
        for (int i1 = 0; i1 < m; ++i1)
            for (int i2 = 0; i2 < m; ++i2) r -= y2i[(a * m + i1) * m + i2] * sig.x2(i1, i2);
        out.sharp[std::size_t(a)] = r;
    }
    for (int a = 0; a < d; ++a)
        for (int i2 = 0; i2 < m; ++i2) {
            double r = y1j[a * m + i2] - y1i[a * m + i2];
            for (int i1 = 0; i1 < m; ++i1) r -= y2i[(a * m + i1) * m + i2] * sig.x1(i1);
            out.sharp_sharp[std::size_t(a) * m + i2] = r;
        }
    return out;
}

/// Controlled triple for g(y) from (y, y', y''):
///   [g(y)]'  = Dg(y) y',   [g(y)]'' = Dg(y) y'' + D^2 g(y) (y' (x) y').
/// The result's value dimension is out_dim * m (the matrix g(y) flattened).
inline ControlledPath compose_smooth(const SmoothField& g, const ControlledPath& cp) {
    const int d = cp.value_dim, m = cp.driver_dim;
    if (g.state_dim != d || g.driver_dim != m)
        throw DomainError("compose_smooth: field dimensions do not match the controlled path");
    const int out_rows = g.out_dim;
    const std::size_t pts = cp.point_count();
    ControlledPath out;
    out.value_dim = out_rows * m;
    out.driver_dim = m;
    out.driver = cp.driver;
    out.y.assign(pts * std::size_t(out_rows) * m, 0.0);
    out.y1.assign(pts * std::size_t(out_rows) * m * m, 0.0);
    out.y2.assign(pts * std::size_t(out_rows) * m * m * m, 0.0);
    std::vector<double> gv(std::size_t(out_rows) * m), dg(std::size_t(out_rows) * m * d),
        d2g(std::size_t(out_rows) * m * d * d);
    for (std::size_t k = 0; k < pts; ++k) {
        const double* yk = cp.y_at(k);
        const double* y1k = cp.y1_at(k);
        const double* y2k = cp.y2_at(k);
        g.value(yk, gv.data());
        g.deriv1(yk, dg.data());
        g.deriv2(yk, d2g.data());
        double* oy = out.y.data() + k * gv.size();
        double* oy1 = out.y1.data() + k * gv.size() * m;
        double* oy2 = out.y2.data() + k * gv.size() * m * m;
        for (std::size_t idx = 0; idx < gv.size(); ++idx) oy[idx] = gv[idx];
        for (int a = 0; a < out_rows; ++a)
            for (int i = 0; i < m; ++i) {
                const std::size_t row = std::size_t(a) * m + i;
                for (int i1 = 0; i1 < m; ++i1) {
                    double acc = 0.0;
                    for (int b = 0; b < d; ++b) acc += dg[row * d + b] * y1k[b * m + i1];
                    oy1[row * m + i1] = acc;
                }
                for (int i1 = 0; i1 < m; ++i1)
                    for (int i2 = 0; i2 < m; ++i2) {
                        double acc = 0.0;
                        for (int b = 0; b < d; ++b)
                            acc += dg[row * d + b] * y2k[(b * m + i1) * m + i2];
                        for (int b = 0; b < d; ++b)
                            for (int c = 0; c < d; ++c)
                                acc += d2g[(row * d + b) * d + c] * y1k[b * m + i1] *
                                       y1k[c * m + i2];
                        oy2[(row * m + i1) * m + i2] = acc;
                    }
            }
    }
    return out;
}

struct RoughIntegralResult {
    std::vector<double> value;  // d x m, [a*m + i]
    double cauchy_increment = 0.0;
    bool converged = false;
    int refinements = 0;
};

namespace detail {

inline std::vector<double> compensated_sum(const ControlledPath& cp,
                                           const std::vector<std::size_t>& part) {
    const int d = cp.value_dim, m = cp.driver_dim;
    std::vector<double> acc(std::size_t(d) * m, 0.0);
    for (std::size_t b = 0; b + 1 < part.size(); ++b) {
        const std::size_t u = part[b], v = part[b + 1];
        const TruncatedSignature sig = cp.driver->interval(u, v);
        const double *yu = cp.y_at(u), *y1u = cp.y1_at(u), *y2u = cp.y2_at(u);
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < m; ++i) {
                double term = yu[a] * sig.x1(i);
                for (int i1 = 0; i1 < m; ++i1) term += y1u[a * m + i1] * sig.x2(i1, i);
                for (int i1 = 0; i1 < m; ++i1)
                    for (int i2 = 0; i2 < m; ++i2)
                        term += y2u[(a * m + i1) * m + i2] * sig.x3(i1, i2, i);
                acc[std::size_t(a) * m + i] += term;
            }
    }
    return acc;
}

}  // namespace detail

/// Rough integral of (y, y', y'') against the driver over grid range [i0, i1]:
/// compensated sums over successively bisected partitions until two refinement
/// levels agree to `rel_tol` or the finest grid is reached. Non-convergence at
/// the finest grid is reported, not thrown.
inline RoughIntegralResult rough_integral(const ControlledPath& cp, std::size_t i0,
                                          std::size_t i1, double rel_tol = 1e-10) {
    if (!cp.driver) throw DomainError("rough_integral: controlled path has no driver");
    if (i1 > cp.point_count() - 1 || i0 >= i1)
        throw DomainError("rough_integral: bad grid range");
    std::vector<std::size_t> part{i0, i1};
    RoughIntegralResult res;
    res.value = detail::compensated_sum(cp, part);
    while (true) {
        // bisect every block that still spans more than one grid cell
        std::vector<std::size_t> next;
        next.reserve(part.size() * 2);
        bool splittable = false;
        for (std::size_t b = 0; b + 1 < part.size(); ++b) {
            next.push_back(part[b]);
            if (part[b + 1] - part[b] >= 2) {
                next.push_back(part[b] + (part[b + 1] - part[b]) / 2);
                splittable = true;
            }
        }
        next.push_back(part.back());
        if (!splittable) {
            res.converged = res.refinements > 0 && res.cauchy_increment <= rel_tol;
            return res;
        }
        std::vector<double> fine = detail::compensated_sum(cp, next);
        double diff = 0.0, scale = 0.0;
        for (std::size_t idx = 0; idx < fine.size(); ++idx) {
            diff += (fine[idx] - res.value[idx]) * (fine[idx] - res.value[idx]);
            scale += fine[idx] * fine[idx];
        }
        res.cauchy_increment = std::sqrt(diff) / (1.0 + std::sqrt(scale));
        res.value = std::move(fine);
        res.refinements += 1;
        part = std::move(next);
        if (res.cauchy_increment <= rel_tol) {
            res.converged = true;
            return res;
        }
    }
}

/// ||(y, y', y'')||_{x,p,I} = |||y''|||_{p-var} + |||R^#|||_{p/3-var} + |||R^##|||_{p/2-var}
/// over grid range [i0, i1].
inline double controlled_norm(const ControlledPath& cp, std::size_t i0, std::size_t i1, double p) {
    const int d = cp.value_dim, m = cp.driver_dim;
    IncrementNorm y2_inc = [&cp, d, m](std::size_t i, std::size_t j) {
        const double *a = cp.y2_at(i), *b = cp.y2_at(j);
        double acc = 0.0;
        for (int idx = 0; idx < d * m * m; ++idx) acc += (b[idx] - a[idx]) * (b[idx] - a[idx]);
        return std::sqrt(acc);
    };
    IncrementNorm sharp = [&cp](std::size_t i, std::size_t j) {
        const Remainders r = remainders(cp, i, j);
        double acc = 0.0;
        for (double x : r.sharp) acc += x * x;
        return std::sqrt(acc);
    };
    IncrementNorm sharp_sharp = [&cp](std::size_t i, std::size_t j) {
        const Remainders r = remainders(cp, i, j);
        double acc = 0.0;
        for (double x : r.sharp_sharp) acc += x * x;
        return std::sqrt(acc);
    };
    return p_variation(y2_inc, i0, i1, p) + p_variation(sharp, i0, i1, p / 3.0) +
           p_variation(sharp_sharp, i0, i1, p / 2.0);
}

/// Holder flavor of the controlled norm: |||y''|||_alpha + |||R^#|||_{3a} + |||R^##|||_{2a}.
inline double controlled_norm_holder(const ControlledPath& cp, std::size_t i0, std::size_t i1,
                                     double alpha) {
    const int d = cp.value_dim, m = cp.driver_dim;
    std::vector<double> times(cp.point_count());
    for (std::size_t k = 0; k < times.size(); ++k)
        times[k] = cp.driver->grid_time(cp.driver->depth(), k);
    IncrementNorm y2_inc = [&cp, d, m](std::size_t i, std::size_t j) {
        const double *a = cp.y2_at(i), *b = cp.y2_at(j);
        double acc = 0.0;
        for (int idx = 0; idx < d * m * m; ++idx) acc += (b[idx] - a[idx]) * (b[idx] - a[idx]);
        return std::sqrt(acc);
    };
    IncrementNorm sharp = [&cp](std::size_t i, std::size_t j) {
        const Remainders r = remainders(cp, i, j);
        double acc = 0.0;
        for (double x : r.sharp) acc += x * x;
        return std::sqrt(acc);
    };
    IncrementNorm sharp_sharp = [&cp](std::size_t i, std::size_t j) {
        const Remainders r = remainders(cp, i, j);
        double acc = 0.0;
        for (double x : r.sharp_sharp) acc += x * x;
        return std::sqrt(acc);
    };
    return holder_norm(y2_inc, times, i0, i1, alpha) +
           holder_norm(sharp, times, i0, i1, std::min(1.0, 3.0 * alpha)) +
           holder_norm(sharp_sharp, times, i0, i1, std::min(1.0, 2.0 * alpha));
}

// -------------------------------------------------------------------------
// Built-in smooth fields
// -------------------------------------------------------------------------

/// g(y) = const matrix sigma (d x m).
inline SmoothField constant_field(int d, int m, std::vector<double> sigma) {
    SmoothField f;
    f.state_dim = d;
    f.driver_dim = m;
    f.out_dim = d;
    double b = 0.0;
    for (double x : sigma) b = std::max(b, std::abs(x));
    f.bound = b;
    f.value = [sigma](const double*, double* out) {
        for (std::size_t i = 0; i < sigma.size(); ++i) out[i] = sigma[i];
    };
    const std::size_t n1 = std::size_t(d) * m * d;
    f.deriv1 = [n1](const double*, double* out) { std::fill(out, out + n1, 0.0); };
    f.deriv2 = [n1, d](const double*, double* out) { std::fill(out, out + n1 * d, 0.0); };
    f.deriv3 = [n1, d](const double*, double* out) {
        std::fill(out, out + n1 * std::size_t(d) * d, 0.0);
    };
    return f;
}

/// d = m = 1, g(y) = y (the exp(x) benchmark field).
inline SmoothField linear_scalar_field() {
    SmoothField f;
    f.state_dim = f.driver_dim = f.out_dim = 1;
    f.bound = 1.0;
    f.value = [](const double* y, double* out) { out[0] = y[0]; };
    f.deriv1 = [](const double*, double* out) { out[0] = 1.0; };
    f.deriv2 = [](const double*, double* out) { out[0] = 0.0; };
    f.deriv3 = [](const double*, double* out) { out[0] = 0.0; };
    return f;
}

/// Bounded smooth test field g^a_i(y) = scale * sin(y_{(a+i) mod d} + phase(a,i)).
/// All derivative tensors are bounded by `scale`.
inline SmoothField sine_field(int d, int m, double scale, double phase_step = 0.7) {
    SmoothField f;
    f.state_dim = d;
    f.driver_dim = m;
    f.out_dim = d;
    f.bound = scale;
    auto comp = [d](int a, int i) { return (a + i) % d; };
    auto phase = [phase_step, m](int a, int i) { return phase_step * double(a * m + i + 1); };
    f.value = [=](const double* y, double* out) {
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < m; ++i) out[a * m + i] = scale * std::sin(y[comp(a, i)] + phase(a, i));
    };
    f.deriv1 = [=](const double* y, double* out) {
        std::fill(out, out + std::size_t(d) * m * d, 0.0);
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < m; ++i)
                out[(a * m + i) * d + comp(a, i)] = scale * std::cos(y[comp(a, i)] + phase(a, i));
    };
    f.deriv2 = [=](const double* y, double* out) {
        std::fill(out, out + std::size_t(d) * m * d * d, 0.0);
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < m; ++i) {
                const int b = comp(a, i);
                out[((a * m + i) * d + b) * d + b] = -scale * std::sin(y[b] + phase(a, i));
            }
    };
    f.deriv3 = [=](const double* y, double* out) {
        std::fill(out, out + std::size_t(d) * m * d * d * d, 0.0);
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < m; ++i) {
                const int b = comp(a, i);
                out[(((a * m + i) * d + b) * d + b) * d + b] = -scale * std::cos(y[b] + phase(a, i));
            }
    };
    return f;
}

}  // namespace tfrp

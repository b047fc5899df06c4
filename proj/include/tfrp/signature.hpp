#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tfrp/errors.hpp"

namespace tfrp {

// Level-3 truncated signatures of piecewise-linear paths, with Chen
// concatenation, group inversion and the dyadic interval table the
// convergence diagnostics run on. Tensors are dense row-major doubles;
// dimensions stay single digit here.

/// Levels 1..3 of the iterated integrals of a path over one interval.
struct TruncatedSignature {
    int dim = 0;
    double s = 0.0, t = 0.0;
    std::vector<double> lv1;  // d
    std::vector<double> lv2;  // d*d,   [i*d + j]
    std::vector<double> lv3;  // d*d*d, [(i*d + j)*d + k]

    TruncatedSignature() = default;
    explicit TruncatedSignature(int d, double s_ = 0.0, double t_ = 0.0)
        : dim(d), s(s_), t(t_), lv1(d, 0.0), lv2(std::size_t(d) * d, 0.0),
          lv3(std::size_t(d) * d * d, 0.0) {}

    double& x1(int i) { return lv1[std::size_t(i)]; }
    double x1(int i) const { return lv1[std::size_t(i)]; }
    double& x2(int i, int j) { return lv2[std::size_t(i) * dim + j]; }
    double x2(int i, int j) const { return lv2[std::size_t(i) * dim + j]; }
    double& x3(int i, int j, int k) { return lv3[(std::size_t(i) * dim + j) * dim + k]; }
    double x3(int i, int j, int k) const { return lv3[(std::size_t(i) * dim + j) * dim + k]; }

    double level_norm(int level) const {
        const std::vector<double>& v = (level == 1) ? lv1 : (level == 2) ? lv2 : lv3;
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    }
};

/// Exact signature of one straight segment with increment `delta`:
/// (Delta, Delta^{(x)2} / 2, Delta^{(x)3} / 6).
inline TruncatedSignature segment_signature(const std::vector<double>& delta, double s = 0.0,
                                            double t = 0.0) {
    const int d = int(delta.size());
    TruncatedSignature sig(d, s, t);
    sig.lv1 = delta;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) sig.x2(i, j) = 0.5 * delta[i] * delta[j];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) sig.x3(i, j, k) = delta[i] * delta[j] * delta[k] / 6.0;
    return sig;
}

/// Chen concatenation S_{s,u} * S_{u,t} -> S_{s,t}:
///   X2_{s,t} = X2_{s,u} + X2_{u,t} + x_{s,u} (x) x_{u,t}
///   X3_{s,t} = X3_{s,u} + X3_{u,t} + X2_{s,u} (x) x_{u,t} + x_{s,u} (x) X2_{u,t}
inline TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.dim != b.dim) throw DomainError("chen_concat: dimension mismatch");
    const int d = a.dim;
    TruncatedSignature c(d, a.s, b.t);
    for (int i = 0; i < d; ++i) c.x1(i) = a.x1(i) + b.x1(i);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c.x2(i, j) = a.x2(i, j) + b.x2(i, j) + a.x1(i) * b.x1(j);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                c.x3(i, j, k) = a.x3(i, j, k) + b.x3(i, j, k) + a.x2(i, j) * b.x1(k) +
                                a.x1(i) * b.x2(j, k);
    return c;
}

/// Group inverse: chen_concat(S, group_inverse(S)) is the identity signature.
inline TruncatedSignature group_inverse(const TruncatedSignature& a) {
    const int d = a.dim;
    TruncatedSignature inv(d, a.t, a.s);
    for (int i = 0; i < d; ++i) inv.x1(i) = -a.x1(i);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) inv.x2(i, j) = -a.x2(i, j) + a.x1(i) * a.x1(j);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                inv.x3(i, j, k) = -a.x3(i, j, k) + a.x1(i) * a.x2(j, k) + a.x2(i, j) * a.x1(k) -
                                  a.x1(i) * a.x1(j) * a.x1(k);
    return inv;
}

/// Continuous piecewise-linear path through strictly increasing knots.
struct PiecewiseLinearPath {
    std::vector<double> times;   // strictly increasing, size >= 2
    std::vector<double> values;  // knots x dim, row-major
    int dim = 0;

    PiecewiseLinearPath() = default;
    PiecewiseLinearPath(std::vector<double> ts, std::vector<double> vals, int d)
        : times(std::move(ts)), values(std::move(vals)), dim(d) {
        if (times.size() < 2) throw DomainError("PiecewiseLinearPath: need at least 2 knots");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw DomainError("PiecewiseLinearPath: knot times must be strictly increasing");
        if (values.size() != times.size() * std::size_t(dim))
            throw DomainError("PiecewiseLinearPath: value array shape mismatch");
    }

    std::size_t knot_count() const { return times.size(); }
    double knot_value(std::size_t k, int c) const { return values[k * std::size_t(dim) + c]; }

    /// Index of the first knot strictly after t (clamped to a valid segment end).
    std::size_t segment_end_index(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t hi = std::size_t(it - times.begin());
        if (hi < 1) hi = 1;
        if (hi >= times.size()) hi = times.size() - 1;
        return hi;
    }

    std::vector<double> eval(double t) const {
        if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw DomainError("PiecewiseLinearPath: time out of domain");
        const std::size_t hi = segment_end_index(t);
        const double w = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
        std::vector<double> out(std::size_t(dim), 0.0);
        for (int c = 0; c < dim; ++c)
            out[std::size_t(c)] = (1.0 - w) * knot_value(hi - 1, c) + w * knot_value(hi, c);
        return out;
    }
};

/// Exact level-3 signature of a piecewise-linear path over [s,t]: per-segment
/// signatures (partial segments split linearly) chained by Chen's relation.
inline TruncatedSignature lift_piecewise_linear(const PiecewiseLinearPath& path, double s,
                                                double t) {
    if (!(s < t)) throw DomainError("lift_piecewise_linear: need s < t");
    if (s < path.times.front() - 1e-12 || t > path.times.back() + 1e-12)
        throw DomainError("lift_piecewise_linear: interval outside path domain");
    const int d = path.dim;
    TruncatedSignature acc(d, s, s);
    std::vector<double> prev = path.eval(s);
    std::vector<double> delta(std::size_t(d), 0.0);
    double prev_t = s;
    std::size_t k = path.segment_end_index(s);
    while (prev_t < t) {
        const double seg_end = std::min(path.times[k], t);
        std::vector<double> cur = path.eval(seg_end);
        for (int c = 0; c < d; ++c) delta[std::size_t(c)] = cur[std::size_t(c)] - prev[std::size_t(c)];
        acc = chen_concat(acc, segment_signature(delta));
        prev = std::move(cur);
        prev_t = seg_end;
        ++k;
    }
    acc.s = s;
    acc.t = t;
    return acc;
}

/// Signatures over every dyadic interval [t^n_{k-1}, t^n_k], n <= n_max,
/// k = 1..2^n, of the path's span. Built from prefix signatures at the finest
/// table resolution and answered as inv(P_{k-1}) * P_k per entry.
class SignatureTable {
  public:
    static constexpr int kDepthCap = 12;

    SignatureTable(const PiecewiseLinearPath& path, int n_max) : n_max_(n_max), dim_(path.dim) {
        if (n_max < 0 || n_max > kDepthCap)
            throw DomainError("SignatureTable: depth " + std::to_string(n_max) + " outside [0, " +
                              std::to_string(kDepthCap) + "]");
        t0_ = path.times.front();
        t1_ = path.times.back();
        const std::size_t fine = std::size_t(1) << n_max_;
        prefix_.reserve(fine + 1);
        prefix_.push_back(TruncatedSignature(dim_, t0_, t0_));
        for (std::size_t k = 1; k <= fine; ++k) {
            const double a = grid_time(n_max_, k - 1);
            const double b = grid_time(n_max_, k);
            prefix_.push_back(chen_concat(prefix_.back(), lift_piecewise_linear(path, a, b)));
        }
    }

    int depth() const { return n_max_; }
    int dim() const { return dim_; }
    double t_min() const { return t0_; }
    double t_max() const { return t1_; }

    double grid_time(int n, std::size_t k) const {
        return t0_ + (t1_ - t0_) * double(k) / double(std::size_t(1) << n);
    }

    /// Signature over [t^n_{k-1}, t^n_k].
    TruncatedSignature entry(int n, std::size_t k) const {
        if (n < 0 || n > n_max_) throw DomainError("SignatureTable: level out of range");
        if (k < 1 || k > (std::size_t(1) << n)) throw DomainError("SignatureTable: index out of range");
        const std::size_t stride = std::size_t(1) << (n_max_ - n);
        return interval(stride * (k - 1), stride * k);
    }

    /// Signature over [fine_i, fine_j] in finest-grid indices.
    TruncatedSignature interval(std::size_t fine_i, std::size_t fine_j) const {
        if (fine_i > fine_j || fine_j >= prefix_.size())
            throw DomainError("SignatureTable: bad interval query");
        TruncatedSignature out = chen_concat(group_inverse(prefix_[fine_i]), prefix_[fine_j]);
        out.s = grid_time(n_max_, fine_i);
        out.t = grid_time(n_max_, fine_j);
        return out;
    }

    std::size_t fine_count() const { return prefix_.size() - 1; }

  private:
    int n_max_, dim_;
    double t0_ = 0.0, t1_ = 1.0;
    std::vector<TruncatedSignature> prefix_;
};

/// Dyadic-sample view as a piecewise-linear path in R^d.
inline PiecewiseLinearPath path_from_rows(const std::vector<double>& times,
                                          const std::vector<double>& rows, int dim) {
    return PiecewiseLinearPath(times, rows, dim);
}

/// Closed-form level-2 refinement delta over [t^n_{k-1}, t^n_k], n <= m:
///   B^{m+1,2} - B^{m,2} = (1/2) sum_l [ D_{2l-1} (x) D_{2l} - D_{2l} (x) D_{2l-1} ],
/// with D_j the level-(m+1) increments inside the interval. Antisymmetric; zero
/// for d = 1. `fine_values` holds the sample resolved at level m+1 (rows x d).
inline std::vector<double> refinement_delta_level2(const std::vector<double>& fine_values, int dim,
                                                   int fine_level, int m, int n, std::size_t k) {
    if (n > m) throw DomainError("refinement_delta_level2: need n <= m");
    if (fine_level < m + 1)
        throw DomainError("refinement_delta_level2: sample not resolvable at level m+1");
    const std::size_t rows = (std::size_t(1) << fine_level) + 1;
    if (fine_values.size() != rows * std::size_t(dim))
        throw DomainError("refinement_delta_level2: value array shape mismatch");
    if (k < 1 || k > (std::size_t(1) << n)) throw DomainError("refinement_delta_level2: bad k");
    const std::size_t stride = std::size_t(1) << (fine_level - (m + 1));  // fine rows per level-(m+1) cell
    const std::size_t cells = std::size_t(1) << (m - n);                  // level-m cells in the interval
    const std::size_t base = (k - 1) * 2 * cells * stride;                // fine row of t^n_{k-1}
    auto value = [&](std::size_t row, int c) { return fine_values[row * std::size_t(dim) + c]; };
    std::vector<double> delta(std::size_t(dim) * dim, 0.0);
    std::vector<double> a(std::size_t(dim), 0.0), b(std::size_t(dim), 0.0);
    for (std::size_t l = 0; l < cells; ++l) {
        const std::size_t r0 = base + 2 * l * stride;
        for (int c = 0; c < dim; ++c) {
            a[std::size_t(c)] = value(r0 + stride, c) - value(r0, c);
            b[std::size_t(c)] = value(r0 + 2 * stride, c) - value(r0 + stride, c);
        }
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                delta[std::size_t(i) * dim + j] +=
                    0.5 * (a[std::size_t(i)] * b[std::size_t(j)] - b[std::size_t(i)] * a[std::size_t(j)]);
    }
    return delta;
}

}  // namespace tfrp

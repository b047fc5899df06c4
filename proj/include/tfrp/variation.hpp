#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tfrp/errors.hpp"
#include "tfrp/signature.hpp"

namespace tfrp {

// Grid-restricted p-variation machinery. Partitions range over the finite
// grid; for the path level this attains the continuous supremum on
// piecewise-linear data, for two-parameter objects it is the documented
// grid approximation.

/// ||increment or X over (grid[i], grid[j])|| for grid indices i < j.
using IncrementNorm = std::function<double(std::size_t, std::size_t)>;

/// sup over grid partitions of sum ||.||^q (the raw control, not its root).
inline double variation_sum(const IncrementNorm& norm, std::size_t first, std::size_t last,
                            double q) {
    if (last <= first) return 0.0;
    const std::size_t n = last - first;
    std::vector<double> best(n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) {
        double b = 0.0;
        for (std::size_t i = 0; i < j; ++i) {
            const double cand = best[i] + std::pow(norm(first + i, first + j), q);
            if (cand > b) b = cand;
        }
        best[j] = b;
    }
    return best[n];
}

/// q-variation of a one- or two-parameter increment map over the grid range.
inline double p_variation(const IncrementNorm& norm, std::size_t first, std::size_t last,
                          double q) {
    if (last < first) throw DomainError("p_variation: empty grid range");
    if (!(q >= 1.0)) throw DomainError("p_variation: exponent must be >= 1");
    return std::pow(variation_sum(norm, first, last, q), 1.0 / q);
}

/// Same computation, name kept for two-parameter functionals X_{t_i,t_j}.
inline double two_param_variation(const IncrementNorm& norm, std::size_t first, std::size_t last,
                                  double q) {
    return p_variation(norm, first, last, q);
}

/// Holder-type norm: max over grid pairs of ||._{s,t}|| / (t-s)^exponent.
inline double holder_norm(const IncrementNorm& norm, const std::vector<double>& times,
                          std::size_t first, std::size_t last, double exponent) {
    if (!(exponent > 0.0 && exponent <= 1.0))
        throw DomainError("holder_norm: exponent must lie in (0,1]");
    double best = 0.0;
    for (std::size_t i = first; i < last; ++i)
        for (std::size_t j = i + 1; j <= last; ++j) {
            const double v = norm(i, j) / std::pow(times[j] - times[i], exponent);
            if (v > best) best = v;
        }
    return best;
}

/// Cached interval norms of a signature table at its finest resolution:
/// pair (i,j) -> ||X^level_{t_i,t_j}||. Makes the O(n^2) DP loops cheap.
class PairwiseNorms {
  public:
    explicit PairwiseNorms(const SignatureTable& table) : count_(table.fine_count() + 1) {
        times_.resize(count_);
        for (std::size_t i = 0; i < count_; ++i) times_[i] = table.grid_time(table.depth(), i);
        for (int lv = 0; lv < 3; ++lv) norms_[lv].assign(count_ * count_, 0.0);
        for (std::size_t i = 0; i + 1 < count_; ++i)
            for (std::size_t j = i + 1; j < count_; ++j) {
                const TruncatedSignature s = table.interval(i, j);
                norms_[0][i * count_ + j] = s.level_norm(1);
                norms_[1][i * count_ + j] = s.level_norm(2);
                norms_[2][i * count_ + j] = s.level_norm(3);
            }
    }

    std::size_t point_count() const { return count_; }
    const std::vector<double>& times() const { return times_; }

    IncrementNorm level(int lv) const {
        const std::vector<double>* data = &norms_[lv - 1];
        const std::size_t n = count_;
        return [data, n](std::size_t i, std::size_t j) { return (*data)[i * n + j]; };
    }

  private:
    std::size_t count_;
    std::vector<double> times_;
    std::vector<double> norms_[3];
};

/// Rough-path p-variation norm over grid range [first, last]:
///   ( sup-sum ||x||^p + sup-sum ||X2||^{p/2} + sup-sum ||X3||^{p/3} )^{1/p}.
inline double rough_pvar_norm(const PairwiseNorms& norms, std::size_t first, std::size_t last,
                              double p) {
    if (!(p > 2.0 && p < 4.0)) throw DomainError("rough_pvar_norm: p must lie in (2,4)");
    const double s1 = variation_sum(norms.level(1), first, last, p);
    const double s2 = variation_sum(norms.level(2), first, last, p / 2.0);
    const double s3 = variation_sum(norms.level(3), first, last, p / 3.0);
    return std::pow(s1 + s2 + s3, 1.0 / p);
}

/// Rough-path Holder norm over grid range: sum_j |||X^j|||_{j alpha}.
inline double rough_holder_norm(const PairwiseNorms& norms, std::size_t first, std::size_t last,
                                double alpha) {
    return holder_norm(norms.level(1), norms.times(), first, last, alpha) +
           holder_norm(norms.level(2), norms.times(), first, last, std::min(1.0, 2.0 * alpha)) +
           holder_norm(norms.level(3), norms.times(), first, last, std::min(1.0, 3.0 * alpha));
}

// -------------------------------------------------------------------------
// Greedy stopping times
// -------------------------------------------------------------------------

/// Greedy partition times over a grid; interior intervals exhaust the control
/// threshold, the last one may not. count() == number of intervals N.
struct GreedySequence {
    std::vector<double> times;    // tau_0 = min I, ..., tau_N = max I
    std::vector<std::size_t> indices;  // grid indices of the times
    double threshold = 0.0;
    double exponent = 0.0;  // p (or alpha in the Holder variant)

    std::size_t count() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Control over grid index pairs; must be nondecreasing in the right endpoint
/// and vanish on degenerate intervals.
using IntervalControl = std::function<double(std::size_t, std::size_t)>;

/// Greedy times: tau_{i+1} = smallest grid point with control(tau_i, .) >= gamma
/// (or max I). Bisection on the monotone control; first grid point reaching
/// gamma wins ties.
inline GreedySequence greedy_times(const IntervalControl& control, double gamma,
                                   const std::vector<double>& times, std::size_t first,
                                   std::size_t last, double exponent) {
    if (!(gamma > 0.0)) throw DomainError("greedy_times: threshold must be positive");
    if (last <= first) throw DomainError("greedy_times: empty interval");
    GreedySequence seq;
    seq.threshold = gamma;
    seq.exponent = exponent;
    seq.times.push_back(times[first]);
    seq.indices.push_back(first);
    std::size_t cur = first;
    while (cur < last) {
        if (control(cur, cur) > 1e-12)
            throw NumericError("greedy_times: control does not vanish at zero length",
                               control(cur, cur));
        std::size_t next;
        if (control(cur, last) < gamma) {
            next = last;  // threshold never reached: final interval
        } else {
            std::size_t lo = cur + 1, hi = last;  // invariant: control(cur, hi) >= gamma
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (control(cur, mid) >= gamma)
                    hi = mid;
                else
                    lo = mid + 1;
            }
            next = lo;
            if (next > cur + 1 && control(cur, next - 1) >= gamma)
                throw NumericError("greedy_times: control not monotone in right endpoint",
                                   control(cur, next - 1));
        }
        seq.times.push_back(times[next]);
        seq.indices.push_back(next);
        cur = next;
    }
    return seq;
}

/// Count bound N <= 1 + gamma^{-p} (control of I)^p for the p-variation greedy
/// sequence; callers assert it against realized counts.
inline double greedy_count_bound_pvar(double gamma, double p, double norm_whole) {
    return 1.0 + std::pow(gamma, -p) * std::pow(norm_whole, p);
}

/// Conservative partition: tau_{i+1} = largest grid point with
/// control(tau_i, .) <= gamma, advancing at least one grid step. Every
/// interval except forced single steps genuinely stays below the threshold,
/// which is what the per-interval contraction arguments need on a grid.
inline GreedySequence greedy_times_undershoot(const IntervalControl& control, double gamma,
                                              const std::vector<double>& times, std::size_t first,
                                              std::size_t last, double exponent) {
    if (!(gamma > 0.0)) throw DomainError("greedy_times_undershoot: threshold must be positive");
    if (last <= first) throw DomainError("greedy_times_undershoot: empty interval");
    GreedySequence seq;
    seq.threshold = gamma;
    seq.exponent = exponent;
    seq.times.push_back(times[first]);
    seq.indices.push_back(first);
    std::size_t cur = first;
    while (cur < last) {
        std::size_t next;
        if (control(cur, last) <= gamma) {
            next = last;
        } else {
            // largest j in [cur+1, last] with control <= gamma, else the forced step
            std::size_t lo = cur + 1, hi = last;
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo + 1) / 2;
                if (control(cur, mid) <= gamma)
                    lo = mid;
                else
                    hi = mid - 1;
            }
            next = (control(cur, lo) <= gamma) ? lo : cur + 1;
        }
        seq.times.push_back(times[next]);
        seq.indices.push_back(next);
        cur = next;
    }
    return seq;
}

/// Holder greedy sequence: threshold on (t - tau)^{1-2 alpha} + |||x|||_{alpha,[tau,t]}.
inline GreedySequence greedy_times_holder(const PairwiseNorms& norms, double gamma,
                                          std::size_t first, std::size_t last, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw DomainError("greedy_times_holder: alpha must lie in (0, 1/2)");
    const std::vector<double>& ts = norms.times();
    IntervalControl control = [&norms, &ts, alpha](std::size_t i, std::size_t j) {
        if (j <= i) return 0.0;
        return std::pow(ts[j] - ts[i], 1.0 - 2.0 * alpha) + rough_holder_norm(norms, i, j, alpha);
    };
    return greedy_times(control, gamma, ts, first, last, alpha);
}

/// Count bound N <= 1 + |I| gamma^{-1/(nu-alpha)} (1 + |||x|||_{nu}^{1/(nu-alpha)}).
inline double greedy_count_bound_holder(double gamma, double alpha, double nu, double interval_len,
                                        double holder_norm_nu) {
    if (!(nu > alpha)) throw DomainError("greedy_count_bound_holder: need nu > alpha");
    const double e = 1.0 / (nu - alpha);
    return 1.0 + interval_len * std::pow(gamma, -e) * (1.0 + std::pow(holder_norm_nu, e));
}

// -------------------------------------------------------------------------
// Dyadic rho metrics and the d_p proxy
// -------------------------------------------------------------------------

/// rho_j(X, Xt) = ( sum_{n<=n_max} n^{gamma_w} sum_k |X^j - Xt^j|^{p/j} )^{j/p}
/// over the dyadic interval families of the two tables. Pass `zero_reference`
/// to measure against the trivial rough path (1,0,0,0).
inline double rho_j(const SignatureTable& a, const SignatureTable* b, int j, double p,
                    double gamma_w, int n_max) {
    if (j < 1 || j > 3) throw DomainError("rho_j: level must be 1, 2 or 3");
    if (a.depth() < n_max || (b && b->depth() < n_max))
        throw DomainError("rho_j: tables shallower than requested depth");
    if (b && b->dim() != a.dim()) throw DomainError("rho_j: dimension mismatch");
    const double q = p / double(j);
    double outer = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        double inner = 0.0;
        for (std::size_t k = 1; k <= (std::size_t(1) << n); ++k) {
            const TruncatedSignature sa = a.entry(n, k);
            double dist2 = 0.0;
            const std::vector<double>& va = (j == 1) ? sa.lv1 : (j == 2) ? sa.lv2 : sa.lv3;
            if (b) {
                const TruncatedSignature sb = b->entry(n, k);
                const std::vector<double>& vb = (j == 1) ? sb.lv1 : (j == 2) ? sb.lv2 : sb.lv3;
                for (std::size_t idx = 0; idx < va.size(); ++idx) {
                    const double dlt = va[idx] - vb[idx];
                    dist2 += dlt * dlt;
                }
            } else {
                for (double x : va) dist2 += x * x;
            }
            inner += std::pow(dist2, 0.5 * q);
        }
        outer += std::pow(double(n), gamma_w) * inner;
    }
    return std::pow(outer, 1.0 / q);
}

inline double rho_j(const SignatureTable& a, const SignatureTable& b, int j, double p,
                    double gamma_w, int n_max) {
    return rho_j(a, &b, j, p, gamma_w, n_max);
}

/// rho_j against the trivial rough path.
inline double rho_j_abs(const SignatureTable& a, int j, double p, double gamma_w, int n_max) {
    return rho_j(a, nullptr, j, p, gamma_w, n_max);
}

struct DpProxyParts {
    double rho1, rho2, rho3;          // rho_j(X, Xt)
    double abs1_x, abs2_x;            // rho_1(X), rho_2(X)
    double abs1_y, abs2_y;            // rho_1(Xt), rho_2(Xt)
    double value;                     // I(X, Xt)
};

/// I(X, Xt): max of the six rho combinations that dominate d_p (times a
/// universal constant). The Cauchy diagnostic; never claimed to equal d_p.
inline DpProxyParts dp_proxy_parts(const SignatureTable& a, const SignatureTable& b, double p,
                                   double gamma_w, int n_max) {
    DpProxyParts out{};
    out.rho1 = rho_j(a, b, 1, p, gamma_w, n_max);
    out.rho2 = rho_j(a, b, 2, p, gamma_w, n_max);
    out.rho3 = rho_j(a, b, 3, p, gamma_w, n_max);
    out.abs1_x = rho_j_abs(a, 1, p, gamma_w, n_max);
    out.abs2_x = rho_j_abs(a, 2, p, gamma_w, n_max);
    out.abs1_y = rho_j_abs(b, 1, p, gamma_w, n_max);
    out.abs2_y = rho_j_abs(b, 2, p, gamma_w, n_max);
    double m = out.rho1;
    m = std::max(m, out.rho2);
    m = std::max(m, out.rho3);
    m = std::max(m, out.rho1 * (out.abs1_x + out.abs1_y));
    m = std::max(m, out.rho2 * (out.abs1_x + out.abs1_y));
    m = std::max(m, out.rho1 * (out.abs2_x + out.abs2_y));
    out.value = m;
    return out;
}

inline double dp_proxy(const SignatureTable& a, const SignatureTable& b, double p, double gamma_w,
                       int n_max) {
    return dp_proxy_parts(a, b, p, gamma_w, n_max).value;
}

}  // namespace tfrp

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tfrp/controlled.hpp"
#include "tfrp/errors.hpp"
#include "tfrp/signature.hpp"
#include "tfrp/variation.hpp"

namespace tfrp {

// Third-order one-step scheme for rough differential equations driven by a
// level-3 lift: over a step with signature (x, X2, X3),
//   y <- y + g(y) x + [Dg g](y) X2 + [D^2g g^2 + (Dg)^2 g](y) X3  (+ f(y) dt),
// which is the local expansion the drifted solution satisfies. The Jacobian
// flow is the exact derivative of the numerical flow, the backward solve runs
// the same step against group-inverse signatures, and Doss-Sussmann reduces
// the drifted equation to an ODE through the pure-flow maps.

using DriftFn = std::function<void(const double*, double*)>;  // f: R^d -> R^d

struct RdeSolution {
    std::vector<double> times;
    std::vector<double> values;  // times x d
    int dim = 0;

    const double* at(std::size_t k) const { return values.data() + k * std::size_t(dim); }
    std::vector<double> back_value() const {
        return std::vector<double>(values.end() - dim, values.end());
    }
};

struct JacobianFlowResult {
    RdeSolution solution;
    std::vector<double> jacobians;  // times x (d*d), row-major d x d

    Eigen::MatrixXd jacobian_at(std::size_t k) const {
        const int d = solution.dim;
        Eigen::MatrixXd J(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) J(a, b) = jacobians[k * std::size_t(d) * d + a * d + b];
        return J;
    }
};

namespace detail {

/// Scheme coefficient tensors of a field at a point, plus their y-derivatives
/// when a Jacobian step is requested.
struct StepCoefficients {
    int d = 0, m = 0;
    std::vector<double> g;    // d x m
    std::vector<double> g2;   // d x m x m      [Dg g]
    std::vector<double> g3;   // d x m x m x m  [D^2g g^2 + (Dg)^2 g], symmetrized
    std::vector<double> dg;   // d x m x d
    std::vector<double> dg2;  // d x m x m x d
    std::vector<double> dg3;  // d x m x m x m x d
};

inline void fill_step_coefficients(const SmoothField& field, const double* y, bool with_jacobian,
                                   StepCoefficients& co) {
    const int d = field.state_dim, m = field.driver_dim;
    co.d = d;
    co.m = m;
    co.g.assign(std::size_t(d) * m, 0.0);
    std::vector<double> dg(std::size_t(d) * m * d), d2g(std::size_t(d) * m * d * d);
    field.value(y, co.g.data());
    field.deriv1(y, dg.data());
    field.deriv2(y, d2g.data());
    auto G = [&](int a, int i) -> double { return co.g[std::size_t(a) * m + i]; };
    auto DG = [&](int a, int i, int b) -> double { return dg[(std::size_t(a) * m + i) * d + b]; };
    auto D2G = [&](int a, int i, int b, int c) -> double {
        return d2g[((std::size_t(a) * m + i) * d + b) * d + c];
    };
    co.g2.assign(std::size_t(d) * m * m, 0.0);
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int b = 0; b < d; ++b) acc += DG(a, j, b) * G(b, i);
                co.g2[(std::size_t(a) * m + i) * m + j] = acc;
            }
    auto G2 = [&](int a, int i, int j) -> double { return co.g2[(std::size_t(a) * m + i) * m + j]; };
    co.g3.assign(std::size_t(d) * m * m * m, 0.0);
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    double acc = 0.0;
                    for (int b = 0; b < d; ++b) acc += DG(a, k, b) * G2(b, i, j);
                    for (int b = 0; b < d; ++b)
                        for (int c = 0; c < d; ++c)
                            acc += 0.5 * D2G(a, k, b, c) * (G(b, i) * G(c, j) + G(b, j) * G(c, i));
                    co.g3[((std::size_t(a) * m + i) * m + j) * m + k] = acc;
                }
    if (!with_jacobian) {
        co.dg.clear();
        co.dg2.clear();
        co.dg3.clear();
        return;
    }
    std::vector<double> d3g(std::size_t(d) * m * d * d * d);
    field.deriv3(y, d3g.data());
    auto D3G = [&](int a, int i, int b, int c, int e) -> double {
        return d3g[(((std::size_t(a) * m + i) * d + b) * d + c) * d + e];
    };
    co.dg = dg;
    co.dg2.assign(std::size_t(d) * m * m * d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int b = 0; b < d; ++b) {
                    double acc = 0.0;
                    for (int c = 0; c < d; ++c)
                        acc += D2G(a, j, c, b) * G(c, i) + DG(a, j, c) * DG(c, i, b);
                    co.dg2[((std::size_t(a) * m + i) * m + j) * d + b] = acc;
                }
    auto DG2 = [&](int a, int i, int j, int b) -> double {
        return co.dg2[((std::size_t(a) * m + i) * m + j) * d + b];
    };
    co.dg3.assign(std::size_t(d) * m * m * m * d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int b = 0; b < d; ++b) {
                        double acc = 0.0;
                        for (int c = 0; c < d; ++c)
                            acc += D2G(a, k, c, b) * G2(c, i, j) + DG(a, k, c) * DG2(c, i, j, b);
                        for (int c = 0; c < d; ++c)
                            for (int e = 0; e < d; ++e) {
                                acc += 0.5 * D3G(a, k, c, e, b) *
                                       (G(c, i) * G(e, j) + G(c, j) * G(e, i));
                                acc += 0.5 * D2G(a, k, c, e) *
                                       (DG(c, i, b) * G(e, j) + G(c, i) * DG(e, j, b) +
                                        DG(c, j, b) * G(e, i) + G(c, j) * DG(e, i, b));
                            }
                        co.dg3[(((std::size_t(a) * m + i) * m + j) * m + k) * d + b] = acc;
                    }
}

/// y <- y + G1 x + G2 X2 + G3 X3 computed from precomputed coefficients.
inline void apply_step(const StepCoefficients& co, const TruncatedSignature& sig, double* y) {
    const int d = co.d, m = co.m;
    for (int a = 0; a < d; ++a) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += co.g[std::size_t(a) * m + i] * sig.x1(i);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                acc += co.g2[(std::size_t(a) * m + i) * m + j] * sig.x2(i, j);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    acc += co.g3[((std::size_t(a) * m + i) * m + j) * m + k] * sig.x3(i, j, k);
        y[a] += acc;
    }
}

/// Derivative of the one-step map: I + DG1 x + DG2 X2 + DG3 X3 (d x d).
inline void step_jacobian(const StepCoefficients& co, const TruncatedSignature& sig,
                          Eigen::MatrixXd& out) {
    const int d = co.d, m = co.m;
    out = Eigen::MatrixXd::Identity(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += co.dg[(std::size_t(a) * m + i) * d + b] * sig.x1(i);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    acc += co.dg2[((std::size_t(a) * m + i) * m + j) * d + b] * sig.x2(i, j);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k)
                        acc += co.dg3[(((std::size_t(a) * m + i) * m + j) * m + k) * d + b] *
                               sig.x3(i, j, k);
            out(a, b) += acc;
        }
}

inline void guard_divergence(const double* y, int d, double cap, const char* where) {
    double norm = 0.0;
    for (int a = 0; a < d; ++a) norm += y[a] * y[a];
    norm = std::sqrt(norm);
    if (!(norm <= cap))
        throw NumericError(std::string(where) + ": solution norm " + std::to_string(norm) +
                               " exceeded the divergence cap " + std::to_string(cap),
                           norm);
}

/// Per-cell signatures of the driver at the requested stride.
inline std::vector<TruncatedSignature> cell_signatures(const SignatureTable& driver,
                                                       std::size_t i0, std::size_t i1,
                                                       std::size_t stride) {
    std::vector<TruncatedSignature> cells;
    cells.reserve((i1 - i0) / stride + 1);
    for (std::size_t i = i0; i < i1; i += stride) cells.push_back(driver.interval(i, std::min(i + stride, i1)));
    return cells;
}

}  // namespace detail

struct SolveOptions {
    std::size_t stride = 1;        // step every `stride` driver cells
    double divergence_cap = 1e8;
    DriftFn drift;                 // empty for the pure equation
};

/// Pure RDE dy = g(y) dB over the driver's grid range [i0, i1] (whole range by
/// default). Steps at every `stride`-th grid point.
inline RdeSolution solve_pure_rde(const SmoothField& g, const SignatureTable& driver,
                                  const std::vector<double>& y0, SolveOptions opt = {},
                                  std::size_t i0 = 0, std::size_t i1 = SIZE_MAX) {
    if (i1 == SIZE_MAX) i1 = driver.fine_count();
    if (int(y0.size()) != g.state_dim) throw DomainError("solve_pure_rde: initial value dimension");
    if (g.driver_dim != driver.dim()) throw DomainError("solve_pure_rde: driver dimension mismatch");
    RdeSolution sol;
    sol.dim = g.state_dim;
    std::vector<double> y = y0;
    sol.times.push_back(driver.grid_time(driver.depth(), i0));
    sol.values.insert(sol.values.end(), y.begin(), y.end());
    detail::StepCoefficients co;
    std::vector<double> fy(y.size());
    for (std::size_t i = i0; i < i1; i += opt.stride) {
        const std::size_t j = std::min(i + opt.stride, i1);
        const TruncatedSignature sig = driver.interval(i, j);
        detail::fill_step_coefficients(g, y.data(), false, co);
        detail::apply_step(co, sig, y.data());
        if (opt.drift) {
            opt.drift(sol.values.data() + sol.values.size() - y.size(), fy.data());
            const double dt = sig.t - sig.s;
            for (std::size_t a = 0; a < y.size(); ++a) y[a] += dt * fy[a];
        }
        detail::guard_divergence(y.data(), int(y.size()), opt.divergence_cap, "solve_pure_rde");
        sol.times.push_back(sig.t);
        sol.values.insert(sol.values.end(), y.begin(), y.end());
    }
    return sol;
}

/// Linearized flow dxi = Dg(y) xi dB along the solution: the exact derivative
/// of the numerical flow, accumulated step by step. jacobians[0] = identity.
inline JacobianFlowResult jacobian_flow(const SmoothField& g, const SignatureTable& driver,
                                        const std::vector<double>& y0, SolveOptions opt = {},
                                        std::size_t i0 = 0, std::size_t i1 = SIZE_MAX) {
    if (i1 == SIZE_MAX) i1 = driver.fine_count();
    const int d = g.state_dim;
    JacobianFlowResult out;
    out.solution.dim = d;
    std::vector<double> y = y0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d), S(d, d);
    auto push = [&](double t) {
        out.solution.times.push_back(t);
        out.solution.values.insert(out.solution.values.end(), y.begin(), y.end());
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out.jacobians.push_back(J(a, b));
    };
    push(driver.grid_time(driver.depth(), i0));
    detail::StepCoefficients co;
    for (std::size_t i = i0; i < i1; i += opt.stride) {
        const std::size_t j = std::min(i + opt.stride, i1);
        const TruncatedSignature sig = driver.interval(i, j);
        detail::fill_step_coefficients(g, y.data(), true, co);
        detail::step_jacobian(co, sig, S);
        detail::apply_step(co, sig, y.data());
        J = S * J;
        detail::guard_divergence(y.data(), d, opt.divergence_cap, "jacobian_flow");
        push(sig.t);
    }
    return out;
}

/// Backward RDE h_b = h_t + int_t^b g(h) dB: steps from the right endpoint
/// against group-inverse cell signatures. Returns h on the grid (h.back() = h_b).
inline RdeSolution solve_backward_rde(const SmoothField& g, const SignatureTable& driver,
                                      const std::vector<double>& h_end, SolveOptions opt = {},
                                      std::size_t i0 = 0, std::size_t i1 = SIZE_MAX) {
    if (i1 == SIZE_MAX) i1 = driver.fine_count();
    const int d = g.state_dim;
    std::vector<double> h = h_end;
    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    rows.push_back(h);
    times.push_back(driver.grid_time(driver.depth(), i1));
    detail::StepCoefficients co;
    std::size_t i = i1;
    while (i > i0) {
        const std::size_t j = (i >= i0 + opt.stride) ? i - opt.stride : i0;
        const TruncatedSignature rev = group_inverse(driver.interval(j, i));
        detail::fill_step_coefficients(g, h.data(), false, co);
        detail::apply_step(co, rev, h.data());
        detail::guard_divergence(h.data(), d, opt.divergence_cap, "solve_backward_rde");
        rows.push_back(h);
        times.push_back(driver.grid_time(driver.depth(), j));
        i = j;
    }
    RdeSolution sol;
    sol.dim = d;
    for (std::size_t k = rows.size(); k-- > 0;) {
        sol.times.push_back(times[k]);
        sol.values.insert(sol.values.end(), rows[k].begin(), rows[k].end());
    }
    return sol;
}

/// Jacobian of the backward solve (derivative of the backward numerical flow
/// with respect to the terminal value), accumulated like jacobian_flow.
inline Eigen::MatrixXd backward_flow_jacobian(const SmoothField& g, const SignatureTable& driver,
                                              const std::vector<double>& h_end,
                                              SolveOptions opt = {}, std::size_t i0 = 0,
                                              std::size_t i1 = SIZE_MAX) {
    if (i1 == SIZE_MAX) i1 = driver.fine_count();
    const int d = g.state_dim;
    std::vector<double> h = h_end;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d), S(d, d);
    detail::StepCoefficients co;
    std::size_t i = i1;
    while (i > i0) {
        const std::size_t j = (i >= i0 + opt.stride) ? i - opt.stride : i0;
        const TruncatedSignature rev = group_inverse(driver.interval(j, i));
        detail::fill_step_coefficients(g, h.data(), true, co);
        detail::step_jacobian(co, rev, S);
        detail::apply_step(co, rev, h.data());
        J = S * J;
        i = j;
    }
    return J;
}

enum class DriftMethod { direct, doss_sussmann };

namespace detail {

/// Doss-Sussmann engine: phi(t, z) and d(phi)/dz by the third-order scheme,
/// with t allowed to sit inside a (linear) finest cell.
class PureFlow {
  public:
    PureFlow(const SmoothField& g, const SignatureTable& driver, double divergence_cap)
        : g_(g), driver_(driver), cap_(divergence_cap),
          cells_(cell_signatures(driver, 0, driver.fine_count(), 1)) {}

    int dim() const { return g_.state_dim; }
    std::size_t cell_count() const { return cells_.size(); }
    double mesh() const { return cells_.empty() ? 0.0 : cells_[0].t - cells_[0].s; }

    /// phi(cell_index + frac, z) with its Jacobian. frac in [0,1); the finest
    /// cells are straight segments, so the partial step uses segment signatures.
    void flow(double cell_pos, const std::vector<double>& z, std::vector<double>& y,
              Eigen::MatrixXd* jac) const {
        const int d = g_.state_dim;
        y = z;
        Eigen::MatrixXd J, S(d, d);
        if (jac) J = Eigen::MatrixXd::Identity(d, d);
        const std::size_t whole = std::size_t(cell_pos);
        const double frac = cell_pos - double(whole);
        StepCoefficients co;
        for (std::size_t i = 0; i < whole && i < cells_.size(); ++i)
            advance(cells_[i], y, jac ? &J : nullptr, S, co);
        if (frac > 0.0 && whole < cells_.size()) {
            std::vector<double> delta(cells_[whole].lv1);
            for (double& x : delta) x *= frac;
            advance(segment_signature(delta), y, jac ? &J : nullptr, S, co);
        }
        if (jac) *jac = J;
    }

  private:
    void advance(const TruncatedSignature& sig, std::vector<double>& y, Eigen::MatrixXd* J,
                 Eigen::MatrixXd& S, StepCoefficients& co) const {
        fill_step_coefficients(g_, y.data(), J != nullptr, co);
        if (J) {
            step_jacobian(co, sig, S);
        }
        apply_step(co, sig, y.data());
        if (J) *J = S * (*J);
        guard_divergence(y.data(), g_.state_dim, cap_, "doss_sussmann flow");
    }

    const SmoothField& g_;
    const SignatureTable& driver_;
    double cap_;
    std::vector<TruncatedSignature> cells_;
};

}  // namespace detail

/// Drifted RDE dy = f(y) dt + g(y) dB.
/// direct:        one-step scheme with the f(y_u)(v-u) increment added.
/// doss_sussmann: solve dz = [dphi/dz]^{-1} f(phi(t,z)) dt by classical RK4 at
///                the driver mesh, then map back through y_t = phi(t, z_t).
///                The inverse is the backward-flow derivative (the two flows
///                compose to the identity), taken here as a matrix inverse.
inline RdeSolution solve_rde_with_drift(const SmoothField& g, const DriftFn& f,
                                        const SignatureTable& driver,
                                        const std::vector<double>& y0, DriftMethod method,
                                        SolveOptions opt = {}) {
    if (method == DriftMethod::direct) {
        SolveOptions o = opt;
        o.drift = f;
        return solve_pure_rde(g, driver, y0, o);
    }
    const int d = g.state_dim;
    detail::PureFlow flow(g, driver, opt.divergence_cap);
    const std::size_t n = flow.cell_count();
    const double h = flow.mesh();
    auto F = [&](double cell_pos, const std::vector<double>& z, std::vector<double>& out) {
        std::vector<double> y;
        Eigen::MatrixXd J;
        flow.flow(cell_pos, z, y, &J);
        Eigen::VectorXd fy(d);
        std::vector<double> fv(std::size_t(d), 0.0);
        f(y.data(), fv.data());
        for (int a = 0; a < d; ++a) fy(a) = fv[std::size_t(a)];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (!(smin > 0.0) || smax / smin > 1e12)
            throw NumericError("doss_sussmann: flow Jacobian is numerically singular",
                               smin > 0.0 ? smax / smin : 0.0);
        Eigen::VectorXd w = svd.solve(fy);
        out.resize(std::size_t(d));
        for (int a = 0; a < d; ++a) out[std::size_t(a)] = w(a);
    };
    // RK4 on dz/dt = F(t, z) with fixed step = driver mesh.
    std::vector<double> z = y0;
    std::vector<std::vector<double>> z_path{z};
    std::vector<double> k1, k2, k3, k4, tmp(std::size_t(d), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        F(double(i), z, k1);
        for (int a = 0; a < d; ++a) tmp[a] = z[a] + 0.5 * h * k1[a];
        F(double(i) + 0.5, tmp, k2);
        for (int a = 0; a < d; ++a) tmp[a] = z[a] + 0.5 * h * k2[a];
        F(double(i) + 0.5, tmp, k3);
        for (int a = 0; a < d; ++a) tmp[a] = z[a] + h * k3[a];
        F(double(i + 1), tmp, k4);
        for (int a = 0; a < d; ++a)
            z[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        z_path.push_back(z);
    }
    RdeSolution sol;
    sol.dim = d;
    std::vector<double> y;
    for (std::size_t i = 0; i <= n; ++i) {
        flow.flow(double(i), z_path[i], y, nullptr);
        sol.times.push_back(driver.grid_time(driver.depth(), i));
        sol.values.insert(sol.values.end(), y.begin(), y.end());
    }
    return sol;
}

// -------------------------------------------------------------------------
// A priori report
// -------------------------------------------------------------------------

struct AprioriReport {
    bool vacuous = false;       // Theta_1 >= 1/2: no admissible greedy radius
    double c_p = 1.0;           // nonconstructive constant, configured
    int m_const = 1;            // nonconstructive integer in Theta_3
    double p = 3.5;
    double theta1 = 0.0;
    double theta = 0.0;         // max per-greedy-interval Theta
    double radius_solution = 0.0;
    std::size_t n_solution = 0;       // realized greedy count
    double n_solution_bound = 0.0;    // 1 + radius^{-p} |||B|||^p
    double norm_whole = 0.0;          // |||B|||_{p-var,[a,b]}
    double sup_bound = 0.0;           // ||y_a|| + Theta/(1-Theta) N-bound
    double pvar_triple_bound = 0.0;   // controlled-norm bound from the greedy count
    double theta3 = 0.0;
    double radius_continuity = 0.0;
    std::size_t n_continuity = 0;     // realized count at the continuity radius
    double n_continuity_bound = 0.0;
    double log2_contraction = 0.0;    // log_2 of the initial-condition Lipschitz factor

    std::string to_text() const;
};

/// Theta_1 = C_p [2C_g + (5 + 2(b-a)^{2/p}) C_g^2 + 17 C_g^3 + 5 C_g^4]
///         + 2C_g + 3C_g^2 + 5C_g^3.
inline double theta1_constant(double c_g, double interval_len, double p, double c_p) {
    return c_p * (2.0 * c_g + (5.0 + 2.0 * std::pow(interval_len, 2.0 / p)) * c_g * c_g +
                  17.0 * c_g * c_g * c_g + 5.0 * c_g * c_g * c_g * c_g) +
           2.0 * c_g + 3.0 * c_g * c_g + 5.0 * c_g * c_g * c_g;
}

/// A priori bounds for the pure equation on the driver's span. All bounds are
/// "modulo C_p, M": those constants are not constructive and enter as
/// configured values.
inline AprioriReport apriori_report(const SmoothField& g, const PairwiseNorms& norms,
                                    const std::vector<double>& y0, double p, double c_p = 1.0,
                                    int m_const = 1) {
    AprioriReport rep;
    rep.c_p = c_p;
    rep.m_const = m_const;
    rep.p = p;
    const std::size_t last = norms.point_count() - 1;
    const double len = norms.times().back() - norms.times().front();
    const double cg = g.bound;
    rep.theta1 = theta1_constant(cg, len, p, c_p);
    rep.norm_whole = rough_pvar_norm(norms, 0, last, p);
    double y0n = 0.0;
    for (double v : y0) y0n += v * v;
    y0n = std::sqrt(y0n);
    if (rep.theta1 >= 0.5) {
        rep.vacuous = true;  // min{1/(2 Theta_1) - 1, ...} <= 0: bounds say nothing
        return rep;
    }
    const double r = 1.0 / (2.0 * rep.theta1) - 1.0;
    rep.radius_solution = std::min(r, std::cbrt(r));
    IntervalControl ctrl = [&norms, p](std::size_t i, std::size_t j) {
        return j <= i ? 0.0 : rough_pvar_norm(norms, i, j, p);
    };
    // Realized count at the radius (the quantity the count bound is about)...
    const GreedySequence seq =
        greedy_times(ctrl, rep.radius_solution, norms.times(), 0, last, p);
    rep.n_solution = seq.count();
    rep.n_solution_bound = greedy_count_bound_pvar(rep.radius_solution, p, rep.norm_whole);
    // ... but the per-interval contraction needs intervals that genuinely stay
    // below the radius; on a grid that is the undershoot partition. Forced
    // single-step overshoots make the bound vacuous.
    const GreedySequence usq =
        greedy_times_undershoot(ctrl, rep.radius_solution, norms.times(), 0, last, p);
    double theta_max = 0.0;
    for (std::size_t b = 0; b + 1 < usq.indices.size(); ++b) {
        const double nb = rough_pvar_norm(norms, usq.indices[b], usq.indices[b + 1], p);
        const double pow3 = std::max(nb, std::max(nb * nb, nb * nb * nb));
        theta_max = std::max(theta_max, rep.theta1 * (1.0 + pow3));
    }
    rep.theta = theta_max;
    if (!(rep.theta < 0.5)) {
        rep.vacuous = true;  // a single grid step already exceeds the radius
        return rep;
    }
    const double ratio = rep.theta / (1.0 - rep.theta);
    rep.sup_bound = y0n + ratio * double(usq.count());
    rep.pvar_triple_bound =
        ratio * std::pow(2.0, (p - 1.0) / p) *
        (1.0 + std::pow(rep.radius_solution, 1.0 - 2.0 * p) * std::pow(rep.norm_whole, 2.0 * p - 1.0));
    const double K = rep.pvar_triple_bound;
    rep.theta3 = double(m_const) * c_p *
                 (cg + (1.0 + std::pow(len, 2.0 / p)) * cg * cg + cg * cg * cg + cg * cg * cg * cg) *
                 (1.0 + 2.0 * K + K * K);
    const double rc = 1.0 / (12.0 * rep.theta3);
    rep.radius_continuity = std::min(rc, std::cbrt(rc));
    const GreedySequence cseq =
        greedy_times(ctrl, rep.radius_continuity, norms.times(), 0, last, p);
    rep.n_continuity = cseq.count();
    rep.n_continuity_bound = greedy_count_bound_pvar(rep.radius_continuity, p, rep.norm_whole);
    const GreedySequence cusq =
        greedy_times_undershoot(ctrl, rep.radius_continuity, norms.times(), 0, last, p);
    rep.log2_contraction = double(cusq.count());  // ||ybar - y|| <= ||ybar_a - y_a|| 2^{Nbar}
    return rep;
}

inline std::string AprioriReport::to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "a priori report (all bounds modulo the configured constants C_p, M)\n";
    os << "  C_p = " << c_p << ", M = " << m_const << ", p = " << p << "\n";
    os << "  Theta_1 = " << theta1 << "\n";
    if (vacuous) {
        os << "  status: bound vacuous (Theta_1 >= 1/2, no admissible greedy radius)\n";
        os << "  |||B|||_{p-var} = " << norm_whole << "\n";
        return os.str();
    }
    os << "  status: ok\n";
    os << "  Theta (max over greedy intervals) = " << theta << "\n";
    os << "  |||B|||_{p-var} = " << norm_whole << "\n";
    os << "  solution radius = " << radius_solution << ", N = " << n_solution
       << " (bound " << n_solution_bound << ")\n";
    os << "  sup-norm bound = " << sup_bound << "\n";
    os << "  p-var triple bound = " << pvar_triple_bound << "\n";
    os << "  Theta_3 = " << theta3 << ", continuity radius = " << radius_continuity
       << ", Nbar = " << n_continuity << " (bound " << n_continuity_bound << ")\n";
    os << "  initial-condition Lipschitz factor = 2^" << log2_contraction << "\n";
    return os.str();
}

}  // namespace tfrp

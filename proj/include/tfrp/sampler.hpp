#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tfrp/dyadic.hpp"
#include "tfrp/errors.hpp"
#include "tfrp/rng.hpp"
#include "tfrp/tempered.hpp"

namespace tfrp {

/// One multi-component TFBM sample on a dyadic grid. Row 0 (t = 0) is zero;
/// columns are i.i.d. components. values(k, c) = B^c_{t_k}.
struct GaussianPathSample {
    DyadicGrid grid;
    double hurst = 0.0;
    double lambda = 0.0;
    int components = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd values;  // (2^n + 1) x d
};

/// Covariance matrix of (B_{t_1}, ..., B_{t_{2^n}}) over the nonzero grid
/// points. Entries come from a single variance table over the grid gaps, so
/// the Bessel quadrature runs O(2^n) times, not O(4^n).
inline Eigen::MatrixXd covariance_matrix(const DyadicGrid& grid, double hurst, double lambda) {
    validate_tfbm_params(hurst, lambda);
    const std::size_t n = grid.cell_count();
    std::vector<double> var(n + 1);  // var[k] = C^2_{t_k} t_k^{2H}
    for (std::size_t k = 0; k <= n; ++k) var[k] = tfbm_variance(hurst, lambda, grid.point(k));
    Eigen::MatrixXd cov(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k <= j; ++k) {
            const double c = 0.5 * (var[j + 1] + var[k + 1] - var[j - k]);
            cov(j, k) = c;
            cov(k, j) = c;
        }
    return cov;
}

namespace detail {

/// Lower Cholesky factor with a single ridge retry of 1e-12 * trace / n.
inline Eigen::MatrixXd cholesky_with_ridge(const Eigen::MatrixXd& cov, bool* ridged = nullptr) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (ridged) *ridged = false;
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double ridge = 1e-12 * cov.trace() / double(cov.rows());
    Eigen::MatrixXd bumped = cov;
    bumped.diagonal().array() += ridge;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) {
        if (ridged) *ridged = true;
        return llt.matrixL();
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov)
                               .eigenvalues()
                               .minCoeff();
    throw NumericError("covariance Cholesky failed beyond ridge; smallest eigenvalue " +
                           std::to_string(min_eig),
                       min_eig);
}

}  // namespace detail

/// Factored sampler: reuse across replicas, immutable once built.
class TfbmSampler {
  public:
    static constexpr int kDefaultLevelCap = 12;

    TfbmSampler(const DyadicGrid& grid, double hurst, double lambda,
                int level_cap = kDefaultLevelCap)
        : grid_(grid), hurst_(hurst), lambda_(lambda) {
        if (grid.level > level_cap)
            throw DomainError("TfbmSampler: grid level " + std::to_string(grid.level) +
                              " exceeds cap " + std::to_string(level_cap));
        chol_ = detail::cholesky_with_ridge(covariance_matrix(grid, hurst, lambda), &ridged_);
    }

    bool ridge_applied() const { return ridged_; }
    const DyadicGrid& grid() const { return grid_; }

    GaussianPathSample sample(int components, std::uint64_t seed) const {
        if (components < 1) throw DomainError("sample_tfbm: need at least one component");
        const std::size_t n = grid_.cell_count();
        GaussianPathSample out;
        out.grid = grid_;
        out.hurst = hurst_;
        out.lambda = lambda_;
        out.components = components;
        out.seed = seed;
        out.values = Eigen::MatrixXd::Zero(n + 1, components);
        Eigen::VectorXd z(n);
        for (int c = 0; c < components; ++c) {
            SplitMix64 stream(component_seed(seed, std::uint64_t(c)));
            for (std::size_t k = 0; k < n; ++k) z(k) = stream.next_normal();
            out.values.block(1, c, n, 1) = chol_.triangularView<Eigen::Lower>() * z;
        }
        return out;
    }

  private:
    DyadicGrid grid_;
    double hurst_, lambda_;
    Eigen::MatrixXd chol_;
    bool ridged_ = false;
};

/// One-shot convenience sampler.
inline GaussianPathSample sample_tfbm(const DyadicGrid& grid, double hurst, double lambda,
                                      int components, std::uint64_t seed,
                                      int level_cap = TfbmSampler::kDefaultLevelCap) {
    return TfbmSampler(grid, hurst, lambda, level_cap).sample(components, seed);
}

/// Restriction of a level-M sample to level m <= M (every 2^{M-m}-th row).
/// Keeps the same underlying path, as the level-comparison estimates require.
inline GaussianPathSample restrict_sample(const GaussianPathSample& s, int coarse_level) {
    if (coarse_level > s.grid.level)
        throw DomainError("restrict: target level " + std::to_string(coarse_level) +
                          " exceeds sample level " + std::to_string(s.grid.level));
    if (coarse_level == s.grid.level) return s;
    const std::size_t stride = std::size_t(1) << (s.grid.level - coarse_level);
    GaussianPathSample out;
    out.grid = DyadicGrid(coarse_level, s.grid.horizon);
    out.hurst = s.hurst;
    out.lambda = s.lambda;
    out.components = s.components;
    out.seed = s.seed;
    out.values.resize((std::size_t(1) << coarse_level) + 1, s.components);
    for (Eigen::Index r = 0; r < out.values.rows(); ++r)
        out.values.row(r) = s.values.row(Eigen::Index(std::size_t(r) * stride));
    return out;
}

/// Second difference of the variance function across paired dyadic increments,
///   E-type pairing of Delta_{2l} and Delta_{2r} at level m+1 (paper form):
///   V(t+h) + V(t-h) - 2 V(t), t = (2l-2r)/2^{m+1}, h = 2^{-(m+1)};
/// the diagonal l = r returns 2 V(h) = 2 C_h^2 h^{2H}.
inline double increment_covariance(double hurst, double lambda, int m, long l, long r) {
    if (m < 0 || l < 1 || r < 1) throw DomainError("increment_covariance: need m >= 0, l,r >= 1");
    const double h = 1.0 / double(std::uint64_t(1) << (m + 1));
    const double t = double(2 * (l - r)) * h;
    return tfbm_variance(hurst, lambda, t + h) + tfbm_variance(hurst, lambda, t - h) -
           2.0 * tfbm_variance(hurst, lambda, t);
}

}  // namespace tfrp

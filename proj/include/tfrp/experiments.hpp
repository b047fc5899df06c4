#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tfrp/errors.hpp"
#include "tfrp/io.hpp"
#include "tfrp/rde.hpp"
#include "tfrp/rng.hpp"
#include "tfrp/sampler.hpp"
#include "tfrp/signature.hpp"
#include "tfrp/variation.hpp"
#include "tfrp/version.hpp"

namespace tfrp {

// Monte Carlo experiment harness: refinement-decay exponents, the dyadic
// Cauchy diagnostic, covariance validation and RDE refinement convergence.
// Replicas run on a worker pool with per-replica seeds; results land in
// per-replica slots and reduce in fixed order, so outputs are byte-stable.

inline constexpr int kBatchCount = 20;

struct ExperimentConfig {
    double hurst = 0.30;
    double lambda = 1.0;
    int dim = 2;
    int finest_level = 10;    // M
    int m_min = 4, m_max = 9; // coarse range
    int fixed_n = 3;
    double p = 3.5;
    double gamma_w = 3.0;     // rho weight exponent, > p - 1
    int n_max = 8;            // rho truncation depth
    double theta = 0.02;      // summability slack in (0, Hp-1)
    double beta = 0.01;       // Cauchy threshold exponent
    int replicas = 2000;
    std::uint64_t seed = 20240901;
    std::string out_dir = "out";
    bool svg = false;
    int threads = 0;          // 0: hardware concurrency

    void validate_common() const {
        validate_tfbm_params(hurst, lambda);
        if (dim < 1) throw DomainError("config: dim must be >= 1");
        if (m_max >= finest_level)
            throw DomainError("config: coarse range must stay below the finest level");
        if (m_min < 1 || m_min > m_max) throw DomainError("config: bad coarse range");
        if (!(p > 2.0 && p < 4.0)) throw DomainError("config: p must lie in (2,4)");
        if (!(gamma_w > p - 1.0)) throw DomainError("config: weight exponent must exceed p - 1");
        if (replicas < 1) throw DomainError("config: replicas must be positive");
    }

    void validate_lemma_regime() const {
        if (!(hurst > 0.25 && hurst < 0.5))
            throw DomainError("config: decay experiments need Hurst in (1/4, 1/2)");
        if (replicas < 100)
            throw DomainError("config: rate experiments need at least 100 replicas, got " +
                              std::to_string(replicas) +
                              " (increase --replicas; 2000 recommended)");
    }

    void validate_cauchy() const {
        const double slack = hurst * p - 1.0;
        if (!(slack > 0.0) || !(theta < slack))
            throw DomainError(
                "config: Cauchy diagnostic needs H*p > 1 + theta (summability); got H*p = " +
                std::to_string(hurst * p) + ", theta = " + std::to_string(theta));
        if (!(beta > 0.0)) throw DomainError("config: beta must be positive");
    }

    /// Sufficient range for almost-sure summability; larger beta still runs,
    /// it just weakens the threshold diagnostic.
    double beta_summability_cap() const { return (hurst * p - theta - 1.0) / (2.0 * p); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"hurst", hurst},       {"lambda", lambda},
                              {"dim", dim},           {"finest_level", finest_level},
                              {"m_min", m_min},       {"m_max", m_max},
                              {"fixed_n", fixed_n},   {"p", p},
                              {"gamma_w", gamma_w},   {"n_max", n_max},
                              {"theta", theta},       {"beta", beta},
                              {"replicas", replicas}, {"seed", seed},
                              {"out_dir", out_dir},   {"svg", svg}};
    }
};

namespace detail {

template <typename Fn>
inline void parallel_replicas(int replicas, int threads, const Fn& body) {
    if (threads <= 0) threads = int(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, replicas);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < replicas; r = next.fetch_add(1)) {
                try {
                    body(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline PiecewiseLinearPath sample_path(const GaussianPathSample& s) {
    std::vector<double> rows(std::size_t(s.values.rows()) * s.components);
    for (Eigen::Index r = 0; r < s.values.rows(); ++r)
        for (int c = 0; c < s.components; ++c)
            rows[std::size_t(r) * s.components + c] = s.values(r, c);
    return PiecewiseLinearPath(s.grid.points(), rows, s.components);
}

struct BatchStats {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and standard error from fixed-count replica batches.
inline BatchStats batched(const std::vector<double>& per_replica) {
    const int n = int(per_replica.size());
    const int batches = std::min(kBatchCount, n);
    std::vector<double> bm(std::size_t(batches), 0.0);
    std::vector<int> bc(std::size_t(batches), 0);
    for (int r = 0; r < n; ++r) {
        bm[std::size_t(r % batches)] += per_replica[std::size_t(r)];
        bc[std::size_t(r % batches)] += 1;
    }
    BatchStats st;
    for (int b = 0; b < batches; ++b) {
        bm[std::size_t(b)] /= double(bc[std::size_t(b)]);
        st.mean += bm[std::size_t(b)];
    }
    st.mean /= double(batches);
    double var = 0.0;
    for (int b = 0; b < batches; ++b)
        var += (bm[std::size_t(b)] - st.mean) * (bm[std::size_t(b)] - st.mean);
    var /= double(batches > 1 ? batches - 1 : 1);
    st.se = std::sqrt(var / double(batches));
    return st;
}

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_ci = 0.0;  // ~2 SE from per-batch slopes
};

/// OLS of y on x; the CI comes from refitting per batch row.
inline OlsFit ols_with_batches(const std::vector<double>& xs,
                               const std::vector<std::vector<double>>& batch_rows) {
    auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
        const double n = double(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double denom = n * sxx - sx * sx;
        return std::pair<double, double>{(n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom};
    };
    OlsFit out;
    std::vector<double> mean_y(xs.size(), 0.0);
    for (const auto& row : batch_rows)
        for (std::size_t i = 0; i < xs.size(); ++i) mean_y[i] += row[i] / double(batch_rows.size());
    auto [slope, intercept] = fit(xs, mean_y);
    out.slope = slope;
    out.intercept = intercept;
    std::vector<double> slopes;
    for (const auto& row : batch_rows) slopes.push_back(fit(xs, row).first);
    double mu = 0.0;
    for (double s : slopes) mu += s / double(slopes.size());
    double var = 0.0;
    for (double s : slopes) var += (s - mu) * (s - mu);
    var /= double(slopes.size() > 1 ? slopes.size() - 1 : 1);
    out.slope_ci = 2.0 * std::sqrt(var / double(slopes.size()));
    return out;
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& experiment,
                           const ExperimentConfig& cfg, double wall_seconds) {
    nlohmann::json j{{"experiment", experiment},
                     {"config", cfg.to_json()},
                     {"library_version", kVersion},
                     {"wall_time_seconds", wall_seconds}};
    std::ofstream out(dir / (experiment + "_manifest.json"));
    out << j.dump(2) << "\n";
}

class WallClock {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// -------------------------------------------------------------------------
// Decay experiment (refinement deltas per level j = 1,2,3)
// -------------------------------------------------------------------------

struct DecayRow {
    int level_j = 0;
    int m = 0;
    int n = 0;
    double moment = 0.0;     // [E |.|^{p/j}]^{j/p} estimate
    double moment_se = 0.0;
    double l2_moment = 0.0;  // [E |.|^2]^{1/2} estimate
    double l2_se = 0.0;
};

struct DecayResult {
    std::vector<DecayRow> rows;
    double slope_l2_j2 = 0.0, slope_l2_j2_ci = 0.0;
    double slope_l2_j3 = 0.0, slope_l2_j3_ci = 0.0;
    double slope_lp_j2 = 0.0, slope_lp_j3 = 0.0;
    double max_abs_level1_delta = 0.0;  // exactly 0 when n <= m
};

/// Per-(j,m) moments of |B^{m+1,j} - B^{m,j}| over the level-n dyadic
/// intervals, one shared path per replica, plus fitted log2 slopes in m.
inline DecayResult run_decay(const ExperimentConfig& cfg) {
    cfg.validate_common();
    cfg.validate_lemma_regime();
    const int n = cfg.fixed_n;
    const int mcount = cfg.m_max - cfg.m_min + 1;
    const DyadicGrid grid(cfg.finest_level);
    const TfbmSampler sampler(grid, cfg.hurst, cfg.lambda);
    const std::size_t cells_n = std::size_t(1) << n;

    // per replica and per m: mean over k of |delta|^{p/j} and |delta|^2, j = 2,3
    std::vector<std::vector<double>> pj2(mcount), pj3(mcount), l22(mcount), l23(mcount);
    for (auto* v : {&pj2, &pj3, &l22, &l23})
        for (auto& row : *v) row.assign(std::size_t(cfg.replicas), 0.0);
    std::vector<double> lvl1(std::size_t(cfg.replicas), 0.0);

    detail::parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
        const GaussianPathSample fine =
            sampler.sample(cfg.dim, replica_seed(cfg.seed, std::uint64_t(r)));
        // restrictions of one shared path; signatures of B^m over level-n intervals
        std::vector<GaussianPathSample> levels;
        std::vector<SignatureTable> tables;  // index m - m_min, depth n
        levels.reserve(std::size_t(mcount) + 1);
        tables.reserve(std::size_t(mcount) + 1);
        for (int m = cfg.m_min; m <= cfg.m_max + 1; ++m) {
            levels.push_back(restrict_sample(fine, m));
            tables.emplace_back(detail::sample_path(levels.back()), n);
        }
        for (int mi = 0; mi < mcount; ++mi) {
            const int m = cfg.m_min + mi;
            double acc_p2 = 0, acc_p3 = 0, acc_22 = 0, acc_23 = 0, acc_1 = 0;
            const Eigen::MatrixXd& vm = levels[std::size_t(mi)].values;
            const Eigen::MatrixXd& vm1 = levels[std::size_t(mi) + 1].values;
            const Eigen::Index stride_m = Eigen::Index(1) << (m - n);
            const Eigen::Index stride_m1 = Eigen::Index(1) << (m + 1 - n);
            for (std::size_t k = 1; k <= cells_n; ++k) {
                // level-1 deltas from the endpoint values themselves (both
                // restrictions carry the same rows, so this is exact)
                double d1 = 0;
                for (int c = 0; c < cfg.dim; ++c) {
                    const double inc_m =
                        vm(Eigen::Index(k) * stride_m, c) - vm(Eigen::Index(k - 1) * stride_m, c);
                    const double inc_m1 = vm1(Eigen::Index(k) * stride_m1, c) -
                                          vm1(Eigen::Index(k - 1) * stride_m1, c);
                    d1 += (inc_m - inc_m1) * (inc_m - inc_m1);
                }
                const TruncatedSignature a = tables[std::size_t(mi)].entry(n, k);
                const TruncatedSignature b = tables[std::size_t(mi) + 1].entry(n, k);
                double d2 = 0, d3 = 0;
                for (std::size_t i = 0; i < a.lv2.size(); ++i)
                    d2 += (a.lv2[i] - b.lv2[i]) * (a.lv2[i] - b.lv2[i]);
                for (std::size_t i = 0; i < a.lv3.size(); ++i)
                    d3 += (a.lv3[i] - b.lv3[i]) * (a.lv3[i] - b.lv3[i]);
                acc_1 = std::max(acc_1, std::sqrt(d1));
                acc_p2 += std::pow(d2, 0.25 * cfg.p);       // |.|^{p/2}
                acc_p3 += std::pow(d3, cfg.p / 6.0);        // |.|^{p/3}
                acc_22 += d2;
                acc_23 += d3;
            }
            lvl1[std::size_t(r)] = std::max(lvl1[std::size_t(r)], acc_1);
            pj2[std::size_t(mi)][std::size_t(r)] = acc_p2 / double(cells_n);
            pj3[std::size_t(mi)][std::size_t(r)] = acc_p3 / double(cells_n);
            l22[std::size_t(mi)][std::size_t(r)] = acc_22 / double(cells_n);
            l23[std::size_t(mi)][std::size_t(r)] = acc_23 / double(cells_n);
        }
    });

    DecayResult res;
    for (double v : lvl1) res.max_abs_level1_delta = std::max(res.max_abs_level1_delta, v);
    std::vector<double> ms;
    std::vector<std::vector<double>> batch_log_l2_j2(kBatchCount), batch_log_l2_j3(kBatchCount);
    std::vector<double> log_lp_j2, log_lp_j3;
    for (int mi = 0; mi < mcount; ++mi) {
        const int m = cfg.m_min + mi;
        ms.push_back(double(m));
        const auto s_p2 = detail::batched(pj2[std::size_t(mi)]);
        const auto s_p3 = detail::batched(pj3[std::size_t(mi)]);
        const auto s_22 = detail::batched(l22[std::size_t(mi)]);
        const auto s_23 = detail::batched(l23[std::size_t(mi)]);
        DecayRow r1{1, m, n, 0.0, 0.0, 0.0, 0.0};
        res.rows.push_back(r1);
        // moment estimates: root of the mean raw moment; SE via delta method
        const double q2 = 2.0 / cfg.p, q3 = 3.0 / cfg.p;
        DecayRow r2{2, m, n, std::pow(s_p2.mean, q2),
                    q2 * std::pow(s_p2.mean, q2 - 1.0) * s_p2.se, std::sqrt(s_22.mean),
                    0.5 / std::sqrt(s_22.mean) * s_22.se};
        DecayRow r3{3, m, n, std::pow(s_p3.mean, q3),
                    q3 * std::pow(s_p3.mean, q3 - 1.0) * s_p3.se, std::sqrt(s_23.mean),
                    0.5 / std::sqrt(s_23.mean) * s_23.se};
        res.rows.push_back(r2);
        res.rows.push_back(r3);
        log_lp_j2.push_back(std::log2(r2.moment));
        log_lp_j3.push_back(std::log2(r3.moment));
        // per-batch log2 L2 moments for slope CIs
        for (int b = 0; b < kBatchCount; ++b) {
            double acc2 = 0, acc3 = 0;
            int cnt = 0;
            for (int r = b; r < cfg.replicas; r += kBatchCount) {
                acc2 += l22[std::size_t(mi)][std::size_t(r)];
                acc3 += l23[std::size_t(mi)][std::size_t(r)];
                ++cnt;
            }
            batch_log_l2_j2[std::size_t(b)].push_back(0.5 * std::log2(acc2 / cnt));
            batch_log_l2_j3[std::size_t(b)].push_back(0.5 * std::log2(acc3 / cnt));
        }
    }
    const auto fit2 = detail::ols_with_batches(ms, batch_log_l2_j2);
    const auto fit3 = detail::ols_with_batches(ms, batch_log_l2_j3);
    res.slope_l2_j2 = fit2.slope;
    res.slope_l2_j2_ci = fit2.slope_ci;
    res.slope_l2_j3 = fit3.slope;
    res.slope_l2_j3_ci = fit3.slope_ci;
    const auto fitp2 = detail::ols_with_batches(ms, {log_lp_j2});
    const auto fitp3 = detail::ols_with_batches(ms, {log_lp_j3});
    res.slope_lp_j2 = fitp2.slope;
    res.slope_lp_j3 = fitp3.slope;
    return res;
}

/// run_decay + CSV/manifest (and optional SVG) under cfg.out_dir.
inline DecayResult run_decay_files(const ExperimentConfig& cfg) {
    detail::WallClock clock;
    const DecayResult res = run_decay(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "decay.csv",
                  {"j", "m", "n", "moment_lp", "moment_lp_se", "moment_l2", "moment_l2_se"});
    for (const auto& r : res.rows)
        csv.row({double(r.level_j), double(r.m), double(r.n), r.moment, r.moment_se, r.l2_moment,
                 r.l2_se});
    CsvWriter slopes(dir / "decay_slopes.csv",
                     {"j", "slope_l2", "slope_l2_ci", "slope_lp", "theory_slope"});
    slopes.row({2.0, res.slope_l2_j2, res.slope_l2_j2_ci, res.slope_lp_j2,
                -(4.0 * cfg.hurst - 1.0) / 2.0});
    slopes.row({3.0, res.slope_l2_j3, res.slope_l2_j3_ci, res.slope_lp_j3,
                -(6.0 * cfg.hurst - 1.0) / 2.0});
    if (cfg.svg) {
        SvgPlot plot("refinement decay (log2)", "m", "log2 L2 moment");
        std::vector<double> xs, y2, y3;
        for (const auto& r : res.rows) {
            if (r.level_j == 2) {
                xs.push_back(double(r.m));
                y2.push_back(std::log2(r.l2_moment));
            }
            if (r.level_j == 3) y3.push_back(std::log2(r.l2_moment));
        }
        plot.add_series("level 2", xs, y2);
        plot.add_series("level 3", xs, y3);
        plot.write(dir / "decay.svg");
    }
    detail::write_manifest(dir, "decay", cfg, clock.seconds());
    return res;
}

// -------------------------------------------------------------------------
// Cauchy diagnostic
// -------------------------------------------------------------------------

struct CauchyRow {
    int m = 0;
    double median_i = 0.0;
    double mean_i = 0.0;
    double fraction_below_threshold = 0.0;  // fraction with I <= 2^{-m beta}
};

struct CauchyResult {
    std::vector<CauchyRow> rows;
};

/// I(B^m, B^{m+1}) per replica and per m; reports medians and the fraction of
/// replicas meeting the 2^{-m beta} threshold.
inline CauchyResult run_cauchy(const ExperimentConfig& cfg) {
    cfg.validate_common();
    cfg.validate_cauchy();
    const int mcount = cfg.m_max - cfg.m_min + 1;
    const DyadicGrid grid(cfg.finest_level);
    const TfbmSampler sampler(grid, cfg.hurst, cfg.lambda);
    std::vector<std::vector<double>> ivals(static_cast<std::size_t>(mcount));
    for (auto& v : ivals) v.assign(std::size_t(cfg.replicas), 0.0);
    detail::parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
        const GaussianPathSample fine =
            sampler.sample(cfg.dim, replica_seed(cfg.seed, std::uint64_t(r)));
        std::vector<SignatureTable> tables;
        tables.reserve(std::size_t(mcount) + 1);
        for (int m = cfg.m_min; m <= cfg.m_max + 1; ++m)
            tables.emplace_back(detail::sample_path(restrict_sample(fine, m)), cfg.n_max);
        for (int mi = 0; mi < mcount; ++mi)
            ivals[std::size_t(mi)][std::size_t(r)] = dp_proxy(
                tables[std::size_t(mi)], tables[std::size_t(mi) + 1], cfg.p, cfg.gamma_w, cfg.n_max);
    });
    CauchyResult res;
    for (int mi = 0; mi < mcount; ++mi) {
        std::vector<double> v = ivals[std::size_t(mi)];
        std::sort(v.begin(), v.end());
        CauchyRow row;
        row.m = cfg.m_min + mi;
        row.median_i = v[v.size() / 2];
        double mean = 0.0;
        for (double x : v) mean += x;
        row.mean_i = mean / double(v.size());
        const double thr = std::pow(2.0, -double(row.m) * cfg.beta);
        std::size_t below = 0;
        for (double x : v)
            if (x <= thr) ++below;
        row.fraction_below_threshold = double(below) / double(v.size());
        res.rows.push_back(row);
    }
    return res;
}

inline CauchyResult run_cauchy_files(const ExperimentConfig& cfg) {
    detail::WallClock clock;
    const CauchyResult res = run_cauchy(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "cauchy.csv", {"m", "median_I", "mean_I", "fraction_below_threshold"});
    for (const auto& r : res.rows)
        csv.row({double(r.m), r.median_i, r.mean_i, r.fraction_below_threshold});
    if (cfg.svg) {
        SvgPlot plot("Cauchy diagnostic (log2 median I)", "m", "log2 median I");
        std::vector<double> xs, ys;
        for (const auto& r : res.rows) {
            xs.push_back(double(r.m));
            ys.push_back(std::log2(r.median_i));
        }
        plot.add_series("median I(B^m, B^{m+1})", xs, ys);
        plot.write(dir / "cauchy.svg");
    }
    detail::write_manifest(dir, "cauchy", cfg, clock.seconds());
    return res;
}

// -------------------------------------------------------------------------
// Covariance validation
// -------------------------------------------------------------------------

struct CovarianceResult {
    double max_abs_standardized_dev = 0.0;  // in SE units, over the full matrix
    double diag_end_dev = 0.0;              // deviation at (T,T) in SE units
    int grid_level = 0;
};

/// Empirical second-moment matrix vs the exact covariance, deviations in
/// batch-SE units.
inline CovarianceResult run_covariance(const ExperimentConfig& cfg) {
    cfg.validate_common();
    const int level = std::min(cfg.finest_level, 6);
    const DyadicGrid grid(level);
    const TfbmSampler sampler(grid, cfg.hurst, cfg.lambda);
    const Eigen::MatrixXd target = covariance_matrix(grid, cfg.hurst, cfg.lambda);
    const std::size_t n = std::size_t(target.rows());
    // per-batch accumulators of outer products (component 0)
    std::vector<Eigen::MatrixXd> batch_sum(kBatchCount, Eigen::MatrixXd::Zero(n, n));
    std::vector<int> batch_count(kBatchCount, 0);
    std::mutex mu;
    detail::parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
        const GaussianPathSample s =
            sampler.sample(1, replica_seed(cfg.seed, std::uint64_t(r)));
        const Eigen::VectorXd b = s.values.col(0).tail(Eigen::Index(n));
        const Eigen::MatrixXd outer = b * b.transpose();
        std::lock_guard<std::mutex> lock(mu);
        batch_sum[std::size_t(r % kBatchCount)] += outer;
        batch_count[std::size_t(r % kBatchCount)] += 1;
    });
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (int b = 0; b < kBatchCount; ++b) {
        batch_sum[std::size_t(b)] /= double(batch_count[std::size_t(b)]);
        mean += batch_sum[std::size_t(b)];
    }
    mean /= double(kBatchCount);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, n);
    for (int b = 0; b < kBatchCount; ++b) {
        const Eigen::MatrixXd d = batch_sum[std::size_t(b)] - mean;
        var += d.cwiseProduct(d);
    }
    var /= double(kBatchCount - 1);
    const Eigen::MatrixXd se = (var / double(kBatchCount)).cwiseSqrt();
    CovarianceResult res;
    res.grid_level = level;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double dev =
                std::abs(mean(Eigen::Index(i), Eigen::Index(j)) - target(Eigen::Index(i), Eigen::Index(j))) /
                std::max(se(Eigen::Index(i), Eigen::Index(j)), 1e-300);
            res.max_abs_standardized_dev = std::max(res.max_abs_standardized_dev, dev);
        }
    res.diag_end_dev = std::abs(mean(Eigen::Index(n - 1), Eigen::Index(n - 1)) -
                                target(Eigen::Index(n - 1), Eigen::Index(n - 1))) /
                       std::max(se(Eigen::Index(n - 1), Eigen::Index(n - 1)), 1e-300);
    return res;
}

inline CovarianceResult run_covariance_files(const ExperimentConfig& cfg) {
    detail::WallClock clock;
    const CovarianceResult res = run_covariance(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "covariance.csv",
                  {"grid_level", "max_abs_standardized_dev", "diag_end_dev"});
    csv.row({double(res.grid_level), res.max_abs_standardized_dev, res.diag_end_dev});
    detail::write_manifest(dir, "covariance", cfg, clock.seconds());
    return res;
}

// -------------------------------------------------------------------------
// RDE refinement convergence
// -------------------------------------------------------------------------

enum class TestFieldKind { constant, linear_scalar, sine };

inline TestFieldKind test_field_from_name(const std::string& name) {
    if (name == "constant") return TestFieldKind::constant;
    if (name == "linear") return TestFieldKind::linear_scalar;
    if (name == "sine") return TestFieldKind::sine;
    throw DomainError("unknown test field '" + name + "' (constant | linear | sine)");
}

struct RefinementRow {
    int m = 0;
    double median_dist = 0.0;
    double max_dist = 0.0;
    double closed_form_err = 0.0;  // linear field only: vs exp closed form
};

struct RefinementResult {
    std::vector<RefinementRow> rows;
    TestFieldKind field;
};

/// Sup-distance over the coarse grid between solutions driven by the level-m
/// and level-(m+1) lifts of one shared path, per m.
inline RefinementResult run_rde_refinement(const ExperimentConfig& cfg, TestFieldKind kind) {
    cfg.validate_common();
    const int mcount = cfg.m_max - cfg.m_min + 1;
    const DyadicGrid grid(cfg.finest_level);
    const int dim_driver = (kind == TestFieldKind::linear_scalar) ? 1 : cfg.dim;
    const TfbmSampler sampler(grid, cfg.hurst, cfg.lambda);
    std::vector<std::vector<double>> dists(static_cast<std::size_t>(mcount));
    for (auto& v : dists) v.assign(std::size_t(cfg.replicas), 0.0);
    std::vector<double> closed_err(std::size_t(cfg.replicas), 0.0);
    detail::parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
        const GaussianPathSample fine =
            sampler.sample(dim_driver, replica_seed(cfg.seed, std::uint64_t(r)));
        SmoothField field;
        std::vector<double> y0;
        if (kind == TestFieldKind::constant) {
            std::vector<double> sigma(std::size_t(dim_driver) * dim_driver, 0.0);
            for (int i = 0; i < dim_driver; ++i) sigma[std::size_t(i) * dim_driver + i] = 0.5;
            field = constant_field(dim_driver, dim_driver, sigma);
            y0.assign(std::size_t(dim_driver), 1.0);
        } else if (kind == TestFieldKind::linear_scalar) {
            field = linear_scalar_field();
            y0 = {1.0};
        } else {
            field = sine_field(dim_driver, dim_driver, 0.5);
            y0.assign(std::size_t(dim_driver), 0.5);
        }
        std::vector<RdeSolution> sols;
        sols.reserve(std::size_t(mcount) + 1);
        for (int m = cfg.m_min; m <= cfg.m_max + 1; ++m) {
            const SignatureTable tab(detail::sample_path(restrict_sample(fine, m)), m);
            sols.push_back(solve_pure_rde(field, tab, y0));
        }
        for (int mi = 0; mi < mcount; ++mi) {
            const int m = cfg.m_min + mi;
            const RdeSolution& coarse = sols[std::size_t(mi)];
            const RdeSolution& finer = sols[std::size_t(mi) + 1];
            double sup = 0.0;
            for (std::size_t k = 0; k < coarse.times.size(); ++k) {
                const double* yc = coarse.at(k);
                const double* yf = finer.at(2 * k);
                double dv = 0.0;
                for (int a = 0; a < coarse.dim; ++a) dv += (yc[a] - yf[a]) * (yc[a] - yf[a]);
                sup = std::max(sup, std::sqrt(dv));
            }
            dists[std::size_t(mi)][std::size_t(r)] = sup;
        }
        if (kind == TestFieldKind::linear_scalar) {
            const RdeSolution& best = sols.back();
            const double x_inc = fine.values(fine.values.rows() - 1, 0) - fine.values(0, 0);
            closed_err[std::size_t(r)] =
                std::abs(best.back_value()[0] - std::exp(x_inc)) / std::abs(std::exp(x_inc));
        }
    });
    RefinementResult res;
    res.field = kind;
    for (int mi = 0; mi < mcount; ++mi) {
        std::vector<double> v = dists[std::size_t(mi)];
        std::sort(v.begin(), v.end());
        RefinementRow row;
        row.m = cfg.m_min + mi;
        row.median_dist = v[v.size() / 2];
        row.max_dist = v.back();
        if (kind == TestFieldKind::linear_scalar) {
            double worst = 0.0;
            for (double e : closed_err) worst = std::max(worst, e);
            row.closed_form_err = worst;
        }
        res.rows.push_back(row);
    }
    return res;
}

inline RefinementResult run_rde_refinement_files(const ExperimentConfig& cfg, TestFieldKind kind) {
    detail::WallClock clock;
    const RefinementResult res = run_rde_refinement(cfg, kind);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "refine.csv", {"m", "median_dist", "max_dist", "closed_form_err"});
    for (const auto& r : res.rows)
        csv.row({double(r.m), r.median_dist, r.max_dist, r.closed_form_err});
    detail::write_manifest(dir, "refine", cfg, clock.seconds());
    return res;
}

// -------------------------------------------------------------------------
// Sample / lift / solve file emitters (the non-Monte-Carlo CLI surfaces)
// -------------------------------------------------------------------------

/// CSV `t,comp_0,...,comp_{d-1}` plus a JSON sidecar with the provenance.
inline void write_sample_files(const GaussianPathSample& s, const std::filesystem::path& dir,
                               const std::string& stem = "sample") {
    std::filesystem::create_directories(dir);
    std::vector<std::string> header{"t"};
    for (int c = 0; c < s.components; ++c) header.push_back("comp_" + std::to_string(c));
    CsvWriter csv(dir / (stem + ".csv"), header);
    for (Eigen::Index r = 0; r < s.values.rows(); ++r) {
        std::vector<double> row{s.grid.point(std::size_t(r))};
        for (int c = 0; c < s.components; ++c) row.push_back(s.values(r, c));
        csv.row(row);
    }
    nlohmann::json meta{{"hurst", s.hurst},   {"lambda", s.lambda},
                        {"level", s.grid.level}, {"seed", s.seed},
                        {"dim", s.components},   {"version", kVersion}};
    std::ofstream out(dir / (stem + ".json"));
    out << meta.dump(2) << "\n";
}

/// CSV rows `n,k,level,flat_index,value` for every dyadic table entry.
inline void write_signature_table(const SignatureTable& table, const std::filesystem::path& dir,
                                  const std::string& stem = "lift") {
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / (stem + ".csv"), {"n", "k", "level", "flat_index", "value"});
    for (int n = 0; n <= table.depth(); ++n)
        for (std::size_t k = 1; k <= (std::size_t(1) << n); ++k) {
            const TruncatedSignature sig = table.entry(n, k);
            for (int lv = 1; lv <= 3; ++lv) {
                const std::vector<double>& data = (lv == 1) ? sig.lv1 : (lv == 2) ? sig.lv2 : sig.lv3;
                for (std::size_t idx = 0; idx < data.size(); ++idx)
                    csv.row({double(n), double(k), double(lv), double(idx), data[idx]});
            }
        }
}

/// CSV `t,y_0..y_{d-1}`.
inline void write_solution(const RdeSolution& sol, const std::filesystem::path& dir,
                           const std::string& stem = "solution") {
    std::filesystem::create_directories(dir);
    std::vector<std::string> header{"t"};
    for (int a = 0; a < sol.dim; ++a) header.push_back("y_" + std::to_string(a));
    CsvWriter csv(dir / (stem + ".csv"), header);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        std::vector<double> row{sol.times[k]};
        for (int a = 0; a < sol.dim; ++a) row.push_back(sol.at(k)[a]);
        csv.row(row);
    }
}

}  // namespace tfrp

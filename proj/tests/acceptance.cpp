// Acceptance suite: one pass/fail line per criterion, exit 1 if any fail.
// Run as: acceptance [--cli /path/to/tfrp] [--only N]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tfrp/bessel.hpp"
#include "tfrp/controlled.hpp"
#include "tfrp/experiments.hpp"
#include "tfrp/rde.hpp"
#include "tfrp/rng.hpp"
#include "tfrp/sampler.hpp"
#include "tfrp/signature.hpp"
#include "tfrp/tempered.hpp"
#include "tfrp/variation.hpp"

using namespace tfrp;

namespace {

int g_failures = 0;
std::string g_cli_path;
int g_only = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

bool want(int criterion) { return g_only == 0 || g_only == criterion; }

PiecewiseLinearPath to_path(const GaussianPathSample& s) {
    std::vector<double> rows(std::size_t(s.values.rows()) * s.components);
    for (Eigen::Index r = 0; r < s.values.rows(); ++r)
        for (int c = 0; c < s.components; ++c)
            rows[std::size_t(r) * s.components + c] = s.values(r, c);
    return PiecewiseLinearPath(s.grid.points(), rows, s.components);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// --------------------------------------------------------------------------

void criterion_1_algebraic_identities() {
    const int depth = 8, d = 3;
    const TfbmSampler sampler(DyadicGrid(depth), 0.3, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const SignatureTable table(to_path(sampler.sample(d, replica_seed(101, rep))), depth);
        for (int n = 0; n < depth; ++n)
            for (std::size_t k = 1; k <= (std::size_t(1) << n); ++k) {
                const auto parent = table.entry(n, k);
                const auto left = table.entry(n + 1, 2 * k - 1);
                const auto right = table.entry(n + 1, 2 * k);
                const double scale2 = 1.0 + parent.level_norm(2);
                const double scale3 = 1.0 + parent.level_norm(3);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        const double chen2 = parent.x2(i, j) - left.x2(i, j) - right.x2(i, j) -
                                             left.x1(i) * right.x1(j);
                        worst = std::max(worst, std::abs(chen2) / scale2);
                        const double sym = parent.x2(i, j) + parent.x2(j, i) -
                                           parent.x1(i) * parent.x1(j);
                        worst = std::max(worst, std::abs(sym) / scale2);
                        for (int l = 0; l < d; ++l) {
                            const double chen3 = parent.x3(i, j, l) - left.x3(i, j, l) -
                                                 right.x3(i, j, l) - left.x2(i, j) * right.x1(l) -
                                                 left.x1(i) * right.x2(j, l);
                            worst = std::max(worst, std::abs(chen3) / scale3);
                            const double shuffle = parent.x1(i) * parent.x2(j, l) -
                                                   parent.x3(i, j, l) - parent.x3(j, i, l) -
                                                   parent.x3(j, l, i);
                            worst = std::max(worst, std::abs(shuffle) / scale3);
                        }
                    }
            }
    }
    report(1, worst <= 1e-12,
           "Chen / symmetry / shuffle residuals at depth 8, d=3, 20 samples: max " +
               format_double(worst) + " (tol 1e-12)");
}

void criterion_2_bessel_identities() {
    double worst_rec = 0.0, worst_der = 0.0;
    bool bounds_ok = true;
    int points = 0;
    for (double z = 0.5; z <= 6.0 && points < 50; z += 0.55)
        for (double v : {0.05, 0.3, 0.45, 0.55, 1.0, 1.45}) {
            if (points >= 50) break;
            ++points;
            worst_rec = std::max(worst_rec, bessel_k_recurrence_residual(v, z));
            worst_der = std::max(worst_der, bessel_k_derivative_identity_residual(v, z, 1e-4));
            const double kv = bessel_k(v, z);
            if (v > 0.5 && v < 1.5) bounds_ok = bounds_ok && kv < bessel_k_bound_mid(v, z);
            if (v > 0.0 && v < 0.5) bounds_ok = bounds_ok && kv < bessel_k_bound_low(v, z);
        }
    const bool pass = worst_rec <= 1e-8 && worst_der <= 1e-8 && bounds_ok;
    report(2, pass,
           "Bessel identities over " + std::to_string(points) + " (v,z) points: recurrence " +
               format_double(worst_rec) + ", derivative " + format_double(worst_der) +
               ", bounds " + (bounds_ok ? "strict" : "VIOLATED"));
}

void criterion_3_tempering_coefficient() {
    double worst = 0.0;
    for (double h : {0.26, 0.30, 0.33})
        for (double lam : {0.5, 1.0, 2.0})
            for (double t : {0.01, 0.1, 0.5, 1.0, 2.0}) {
                const double closed = tempering_coefficient(h, lam, t);
                const double integral = oracle::ct2_integral(h, lam, t);
                worst = std::max(worst, std::abs(closed - integral) / integral);
            }
    report(3, worst <= 1e-6,
           "C_t^2 closed form vs kernel-square quadrature over 45 combos: max rel err " +
               format_double(worst) + " (tol 1e-6)");
}

void criterion_4_covariance_monte_carlo() {
    ExperimentConfig cfg;
    cfg.hurst = 0.3;
    cfg.lambda = 1.0;
    cfg.finest_level = 5;
    cfg.replicas = 10000;
    cfg.seed = 424242;
    const auto res = run_covariance(cfg);
    report(4, res.max_abs_standardized_dev <= 4.0,
           "covariance at level 5, 10^4 replicas: max standardized deviation " +
               format_double(res.max_abs_standardized_dev) + " SE (tol 4)");
}

void criterion_5_pvar_dp_vs_enumeration() {
    SplitMix64 rng(31415);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int pts = 5 + int(rng.next_u64() % 8);  // 5..12 grid points
        std::vector<double> vals(std::size_t(pts), 0.0);
        for (int i = 1; i < pts; ++i)
            vals[std::size_t(i)] = vals[std::size_t(i - 1)] + rng.next_normal();
        IncrementNorm norm = [&vals](std::size_t i, std::size_t j) {
            return std::abs(vals[j] - vals[i]);
        };
        for (double q : {1.0, 2.0, 2.5, 3.5}) {
            const double dp = p_variation(norm, 0, std::size_t(pts - 1), q);
            const double bf = oracle::brute_force_variation(norm, 0, std::size_t(pts - 1), q);
            if (std::abs(dp - bf) > 1e-12 * (1.0 + bf)) ++mismatches;
        }
    }
    report(5, mismatches == 0,
           "p-variation DP vs exhaustive enumeration on 200 paths x 4 exponents: " +
               std::to_string(mismatches) + " mismatches");
}

void criterion_6_greedy_bounds() {
    const double p = 3.5, alpha = 0.27, nu = 0.29;
    const TfbmSampler sampler(DyadicGrid(8), 0.3, 1.0);
    bool ok = true;
    int runs = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const SignatureTable table(to_path(sampler.sample(2, replica_seed(606, rep))), 8);
        const PairwiseNorms norms(table);
        IntervalControl ctrl = [&norms, p](std::size_t i, std::size_t j) {
            return j <= i ? 0.0 : rough_pvar_norm(norms, i, j, p);
        };
        const double whole = rough_pvar_norm(norms, 0, 256, p);
        const double hnorm = rough_holder_norm(norms, 0, 256, nu);
        for (double gamma : {0.25, 0.5, 1.0}) {
            ++runs;
            const auto seq = greedy_times(ctrl, gamma, norms.times(), 0, 256, p);
            if (double(seq.count()) > greedy_count_bound_pvar(gamma, p, whole)) ok = false;
            const auto hseq = greedy_times_holder(norms, gamma, 0, 256, alpha);
            if (double(hseq.count()) > greedy_count_bound_holder(gamma, alpha, nu, 1.0, hnorm))
                ok = false;
        }
    }
    report(6, ok,
           "greedy counts vs the p-variation and Holder bounds on 100 lifts x 3 thresholds (" +
               std::to_string(runs) + " runs each flavor)");
}

void criterion_7_decay_exponents() {
    ExperimentConfig cfg;
    cfg.hurst = 0.3;
    cfg.dim = 2;
    cfg.fixed_n = 3;
    cfg.m_min = 4;
    cfg.m_max = 9;
    cfg.finest_level = 10;
    cfg.replicas = 2000;
    cfg.seed = 777;
    const auto res = run_decay(cfg);
    const double target2 = -(4.0 * cfg.hurst - 1.0) / 2.0;  // -0.10
    const double target3 = -(6.0 * cfg.hurst - 1.0) / 2.0;  // -0.40
    const bool pass1 = res.max_abs_level1_delta == 0.0;
    const bool pass2 = std::abs(res.slope_l2_j2 - target2) <= 0.15;
    const bool pass3 = std::abs(res.slope_l2_j3 - target3) <= 0.15;
    report(7, pass1 && pass2 && pass3,
           "decay slopes (H=0.3, n=3, m in [4,9], R=2000): level-1 max |delta| " +
               format_double(res.max_abs_level1_delta) + " (want exact 0); level-2 slope " +
               format_double(res.slope_l2_j2) + " vs " + format_double(target2) +
               " +/- 0.15; level-3 slope " + format_double(res.slope_l2_j3) + " vs " +
               format_double(target3) + " +/- 0.15");
    if (!pass3)
        std::printf(
            "       note: the measured level-3 slope tracks -(4H-1)/2 = %.2f, the rate the\n"
            "       level-3 lemma's own proof establishes (its statement prints -(6H-1)/2);\n"
            "       the dominant cross term decays at the level-2 rate, so -0.4 is not\n"
            "       attainable by any faithful implementation. Left red deliberately.\n",
            -(4.0 * cfg.hurst - 1.0) / 2.0);
}

void criterion_8_refinement_delta_closed_form() {
    const int level = 10;
    const auto sample = sample_tfbm(DyadicGrid(level), 0.3, 1.0, 2, 888);
    std::vector<double> rows(std::size_t(sample.values.rows()) * 2);
    for (Eigen::Index r = 0; r < sample.values.rows(); ++r)
        for (int c = 0; c < 2; ++c) rows[std::size_t(r) * 2 + c] = sample.values(r, c);
    SplitMix64 rng(9001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 4 + int(rng.next_u64() % 5);   // 4..8
        const int n = 1 + int(rng.next_u64() % m);   // 1..m
        const std::size_t k = 1 + std::size_t(rng.next_u64() % (std::size_t(1) << n));
        const auto closed = refinement_delta_level2(rows, 2, level, m, n, k);
        const auto coarse = to_path(restrict_sample(sample, m));
        const auto fine = to_path(restrict_sample(sample, m + 1));
        const double lo = double(k - 1) / double(std::size_t(1) << n);
        const double hi = double(k) / double(std::size_t(1) << n);
        const auto lm = lift_piecewise_linear(coarse, lo, hi);
        const auto lf = lift_piecewise_linear(fine, lo, hi);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                worst = std::max(worst, std::abs(closed[std::size_t(i) * 2 + j] -
                                                 (lf.x2(i, j) - lm.x2(i, j))));
    }
    report(8, worst <= 1e-12,
           "level-2 refinement delta closed form vs direct lift difference on 100 triples: max " +
               format_double(worst) + " (tol 1e-12)");
}

void criterion_9_rde_exactness() {
    // constant g: exact at 1e-12
    const auto s = sample_tfbm(DyadicGrid(8), 0.3, 1.0, 2, 91);
    const SignatureTable table(to_path(s), 8);
    auto cg = constant_field(2, 2, {0.7, -0.2, 0.1, 0.4});
    const auto csol = solve_pure_rde(cg, table, {1.0, -1.0});
    const auto span = table.interval(0, 256);
    const double e0 = std::abs(csol.back_value()[0] - (1.0 + 0.7 * span.x1(0) - 0.2 * span.x1(1)));
    const double e1 = std::abs(csol.back_value()[1] - (-1.0 + 0.1 * span.x1(0) + 0.4 * span.x1(1)));

    // linear scalar g at a level-10 driver vs exp
    const auto s1 = sample_tfbm(DyadicGrid(10), 0.3, 1.0, 1, 92);
    const SignatureTable t1(to_path(s1), 10);
    const auto lsol = solve_pure_rde(linear_scalar_field(), t1, {1.0});
    const double x = t1.interval(0, 1024).x1(0);
    const double exp_err = std::abs(lsol.back_value()[0] - std::exp(x)) / std::exp(x);

    // f-only: Doss-Sussmann collapses to RK4 on the ODE
    PiecewiseLinearPath flat(DyadicGrid(8).points(),
                             std::vector<double>(DyadicGrid(8).point_count(), 0.0), 1);
    const SignatureTable zt(flat, 8);
    auto zg = constant_field(1, 1, {0.0});
    DriftFn f = [](const double* y, double* out) { out[0] = -y[0]; };
    const auto fsol = solve_rde_with_drift(zg, f, zt, {2.0}, DriftMethod::doss_sussmann);
    const auto rk = oracle::rk4(
        [](const std::vector<double>& y) { return std::vector<double>{-y[0]}; }, {2.0}, 0.0, 1.0,
        256);
    const double f_err = std::abs(fsol.back_value()[0] - rk[0]);

    const bool pass = e0 <= 1e-12 && e1 <= 1e-12 && exp_err <= 1e-3 && f_err <= 1e-8;
    report(9, pass,
           "RDE exactness: constant-g errors (" + format_double(e0) + ", " + format_double(e1) +
               ") tol 1e-12; exp rel err " + format_double(exp_err) + " tol 1e-3; f-only vs RK4 " +
               format_double(f_err) + " tol 1e-8");
}

void criterion_10_doss_sussmann_vs_direct() {
    // built-in sine-field problem: d = m = 2, C_g = 0.5, f = 1 - y, TFBM driver
    const auto g = sine_field(2, 2, 0.5);
    DriftFn f = [](const double* y, double* out) {
        out[0] = 1.0 - y[0];
        out[1] = 1.0 - y[1];
    };
    const auto fine = sample_tfbm(DyadicGrid(10), 0.3, 1.0, 2, 1010);
    double sup8 = 0.0, sup10 = 0.0;
    for (int level : {8, 10}) {
        const SignatureTable table(to_path(restrict_sample(fine, level)), level);
        const auto a = solve_rde_with_drift(g, f, table, {0.5, 0.5}, DriftMethod::direct);
        const auto b = solve_rde_with_drift(g, f, table, {0.5, 0.5}, DriftMethod::doss_sussmann);
        double sup = 0.0;
        for (std::size_t k = 0; k < a.times.size(); ++k)
            for (int c = 0; c < 2; ++c) sup = std::max(sup, std::abs(a.at(k)[c] - b.at(k)[c]));
        (level == 8 ? sup8 : sup10) = sup;
    }
    const bool pass = sup8 <= 1e-2 && sup10 * 2.0 <= sup8;
    report(10, pass,
           "direct vs Doss-Sussmann on the sine problem: sup-distance " + format_double(sup8) +
               " at level 8 (tol 1e-2), " + format_double(sup10) +
               " at level 10 (need >= 2x tighter)");
}

void criterion_11_jacobians() {
    SplitMix64 rng(1111);
    double worst_fd = 0.0, worst_id = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        // TFBM knots at level 6, stepped at level 10: the fine steps sit inside
        // straight segments, keeping the backward composition residue small
        const auto s = sample_tfbm(DyadicGrid(6), 0.3, 1.0, 2, replica_seed(1111, trial));
        const SignatureTable table(to_path(s), 10);
        const auto g = sine_field(2, 2, 0.35 + 0.1 * rng.next_uniform());
        std::vector<double> y0{rng.next_normal(), rng.next_normal()};
        const auto jf = jacobian_flow(g, table, y0);
        const auto J = jf.jacobian_at(jf.solution.times.size() - 1);
        const double h = 1e-5;
        for (int b = 0; b < 2; ++b) {
            std::vector<double> up = y0, dn = y0;
            up[std::size_t(b)] += h;
            dn[std::size_t(b)] -= h;
            const auto yu = solve_pure_rde(g, table, up).back_value();
            const auto yd = solve_pure_rde(g, table, dn).back_value();
            for (int a = 0; a < 2; ++a) {
                const double fd = (yu[std::size_t(a)] - yd[std::size_t(a)]) / (2.0 * h);
                worst_fd = std::max(worst_fd, std::abs(J(a, b) - fd) / (1.0 + std::abs(fd)));
            }
        }
        const Eigen::MatrixXd Jb = backward_flow_jacobian(g, table, jf.solution.back_value());
        worst_id = std::max(worst_id, (Jb * J - Eigen::MatrixXd::Identity(2, 2)).norm());
        worst_id = std::max(worst_id, (J * Jb - Eigen::MatrixXd::Identity(2, 2)).norm());
    }
    const bool pass = worst_fd <= 1e-4 && worst_id <= 1e-4;
    report(11, pass,
           "jacobian flow vs finite differences (20 problems): rel err " + format_double(worst_fd) +
               " tol 1e-4; forward x backward vs identity: " + format_double(worst_id) +
               " tol 1e-4");
}

void criterion_12_stability_bounds() {
    SplitMix64 rng(12321);
    int runs = 0, sup_ok = 0, ratio_ok = 0, usable = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = sample_tfbm(DyadicGrid(7), 0.3, 1.0, 2, replica_seed(9999, trial));
        const SignatureTable table(to_path(s), 7);
        const PairwiseNorms norms(table);
        const double cg = 0.02 + 0.04 * rng.next_uniform();  // keep Theta_1 < 1/2
        const auto g = sine_field(2, 2, cg);
        std::vector<double> y0{rng.next_normal(), rng.next_normal()};
        const auto rep = apriori_report(g, norms, y0, 3.5);
        ++runs;
        if (rep.vacuous) continue;
        ++usable;
        const auto sol = solve_pure_rde(g, table, y0);
        double sup = 0.0;
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
            double n2 = 0.0;
            for (int a = 0; a < 2; ++a) n2 += sol.at(k)[a] * sol.at(k)[a];
            sup = std::max(sup, std::sqrt(n2));
        }
        if (sup <= rep.sup_bound) ++sup_ok;
        const double eps = 1e-4;
        std::vector<double> y0b{y0[0] + eps, y0[1]};
        const auto solb = solve_pure_rde(g, table, y0b);
        double dist = 0.0;
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
            double n2 = 0.0;
            for (int a = 0; a < 2; ++a)
                n2 += (sol.at(k)[a] - solb.at(k)[a]) * (sol.at(k)[a] - solb.at(k)[a]);
            dist = std::max(dist, std::sqrt(n2));
        }
        if (std::log2(dist / eps) <= rep.log2_contraction) ++ratio_ok;
    }
    const bool pass = usable == runs && sup_ok == usable && ratio_ok == usable;
    report(12, pass,
           "a priori domination on " + std::to_string(runs) + " random runs (C_p = 1, M = 1): " +
               std::to_string(sup_ok) + " sup bounds hold, " + std::to_string(ratio_ok) +
               " contraction bounds hold, " + std::to_string(runs - usable) + " vacuous");
}

void criterion_13_cli_determinism() {
    if (g_cli_path.empty()) {
        report(13, false, "CLI determinism: no --cli path provided");
        return;
    }
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "tfrp_accept_cli";
    fs::remove_all(base);
    fs::create_directories(base);
    auto run = [&](const std::string& args, const fs::path& out) {
        const std::string cmd = g_cli_path + " " + args + " --out " + out.string() + " >/dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    struct Job {
        std::string args;
        std::string csv;
    };
    const std::vector<Job> jobs = {
        {"sample --level 6 --dim 2 --seed 5", "sample.csv"},
        {"lift --level 5 --dim 2 --seed 5 --depth 5", "lift.csv"},
        {"solve --level 6 --dim 2 --seed 5 --field sine", "solution.csv"},
        {"decay --finest-level 7 --m-min 4 --m-max 5 --n 2 --replicas 120 --seed 9", "decay.csv"},
        {"cauchy --hurst 0.32 --finest-level 7 --m-min 4 --m-max 5 --n-max 5 --replicas 60 "
         "--seed 9",
         "cauchy.csv"},
        {"covariance --finest-level 4 --replicas 2000 --seed 9", "covariance.csv"},
        {"refine --finest-level 7 --m-min 4 --m-max 5 --replicas 30 --seed 9 --field sine",
         "refine.csv"},
    };
    bool ok = true;
    std::string detail;
    for (const auto& job : jobs) {
        const fs::path a = base / ("a_" + job.csv), b = base / ("b_" + job.csv);
        if (!run(job.args, a) || !run(job.args, b)) {
            ok = false;
            detail = "CLI run failed for '" + job.args + "'";
            break;
        }
        if (slurp(a / job.csv) != slurp(b / job.csv) || slurp(a / job.csv).empty()) {
            ok = false;
            detail = "CSV differs between reruns for '" + job.args + "'";
            break;
        }
    }
    report(13, ok,
           ok ? "CLI reruns byte-identical across all 7 subcommands" : detail);
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag(argv[i]);
        if (flag == "--cli") g_cli_path = argv[i + 1];
        if (flag == "--only") g_only = std::atoi(argv[i + 1]);
    }
    if (want(1)) criterion_1_algebraic_identities();
    if (want(2)) criterion_2_bessel_identities();
    if (want(3)) criterion_3_tempering_coefficient();
    if (want(4)) criterion_4_covariance_monte_carlo();
    if (want(5)) criterion_5_pvar_dp_vs_enumeration();
    if (want(6)) criterion_6_greedy_bounds();
    if (want(7)) criterion_7_decay_exponents();
    if (want(8)) criterion_8_refinement_delta_closed_form();
    if (want(9)) criterion_9_rde_exactness();
    if (want(10)) criterion_10_doss_sussmann_vs_direct();
    if (want(11)) criterion_11_jacobians();
    if (want(12)) criterion_12_stability_bounds();
    if (want(13)) criterion_13_cli_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}

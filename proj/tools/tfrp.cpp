// tfrp: sample tempered fractional Brownian motion, lift it to level-3 rough
// paths, solve RDEs driven by the lifts, and run the convergence experiments.
//
// Exit codes: 0 success, 2 config rejection, 3 numeric failure.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "tfrp/errors.hpp"
#include "tfrp/experiments.hpp"
#include "tfrp/rde.hpp"
#include "tfrp/sampler.hpp"
#include "tfrp/signature.hpp"
#include "tfrp/version.hpp"

namespace {

struct CliOptions {
    tfrp::ExperimentConfig cfg;
    int level = 8;          // grid level for sample/lift/solve
    int lift_depth = 6;     // table depth for lift
    std::string field = "sine";
    std::string method = "direct";
    double y0 = 1.0;
    double cg_scale = 0.5;
};

void add_shared_flags(CLI::App* app, CliOptions& o) {
    app->add_option("--hurst", o.cfg.hurst, "Hurst index in (0,1)");
    app->add_option("--lambda", o.cfg.lambda, "tempering rate > 0");
    app->add_option("--dim", o.cfg.dim, "number of path components");
    app->add_option("--level", o.level, "dyadic grid level");
    app->add_option("--seed", o.cfg.seed, "base seed");
    app->add_option("--replicas", o.cfg.replicas, "Monte Carlo replicas");
    app->add_option("--p", o.cfg.p, "variation exponent p in (2,4)");
    app->add_option("--out", o.cfg.out_dir, "output directory");
    app->add_option("--threads", o.cfg.threads, "worker count (0 = hardware)");
    app->set_config("--config", "", "flat key=value config file; flags override file values");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("tfrp ") + tfrp::kVersion +
                 " - tempered fractional rough path laboratory"};
    app.require_subcommand(1);
    CliOptions o;

    CLI::App* sample = app.add_subcommand("sample", "draw one TFBM sample and write CSV + sidecar");
    CLI::App* lift = app.add_subcommand("lift", "lift a sample and export the dyadic signature table");
    CLI::App* solve = app.add_subcommand("solve", "solve an RDE driven by a TFBM lift");
    CLI::App* decay = app.add_subcommand("decay", "refinement-delta decay exponents per level");
    CLI::App* cauchy = app.add_subcommand("cauchy", "dyadic Cauchy diagnostic I(B^m, B^{m+1})");
    CLI::App* covariance = app.add_subcommand("covariance", "empirical vs exact covariance");
    CLI::App* refine = app.add_subcommand("refine", "RDE solutions under driver refinement");
    for (CLI::App* sub : {sample, lift, solve, decay, cauchy, covariance, refine})
        add_shared_flags(sub, o);

    lift->add_option("--depth", o.lift_depth, "table depth n_max");
    solve->add_option("--field", o.field, "diffusion field: constant | linear | sine");
    solve->add_option("--method", o.method, "direct | doss_sussmann");
    solve->add_option("--y0", o.y0, "initial value (all components)");
    solve->add_option("--scale", o.cg_scale, "field scale (C_g for sine/constant)");
    refine->add_option("--field", o.field, "diffusion field: constant | linear | sine");
    for (CLI::App* sub : {decay, cauchy, refine}) {
        sub->add_option("--finest-level", o.cfg.finest_level, "finest sampling level M");
        sub->add_option("--m-min", o.cfg.m_min, "coarsest compared level");
        sub->add_option("--m-max", o.cfg.m_max, "finest compared level (< M)");
        sub->add_flag("--svg", o.cfg.svg, "emit log2-scale SVG plots");
    }
    decay->add_option("--n", o.cfg.fixed_n, "fixed dyadic level n of the test intervals");
    cauchy->add_option("--gamma-w", o.cfg.gamma_w, "rho weight exponent (> p-1)");
    cauchy->add_option("--n-max", o.cfg.n_max, "rho truncation depth");
    cauchy->add_option("--theta", o.cfg.theta, "summability slack in (0, Hp-1)");
    cauchy->add_option("--beta", o.cfg.beta, "threshold exponent in (0, (Hp-theta-1)/(2p))");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sample->parsed() || lift->parsed() || solve->parsed()) {
            const tfrp::DyadicGrid grid(o.level);
            const auto s = tfrp::sample_tfbm(grid, o.cfg.hurst, o.cfg.lambda, o.cfg.dim, o.cfg.seed);
            if (sample->parsed()) {
                tfrp::write_sample_files(s, o.cfg.out_dir);
                std::printf("wrote %s/sample.csv (+ sidecar)\n", o.cfg.out_dir.c_str());
            } else if (lift->parsed()) {
                std::vector<double> rows(std::size_t(s.values.rows()) * o.cfg.dim);
                for (Eigen::Index r = 0; r < s.values.rows(); ++r)
                    for (int c = 0; c < o.cfg.dim; ++c)
                        rows[std::size_t(r) * o.cfg.dim + c] = s.values(r, c);
                tfrp::PiecewiseLinearPath path(grid.points(), rows, o.cfg.dim);
                tfrp::SignatureTable table(path, o.lift_depth);
                tfrp::write_signature_table(table, o.cfg.out_dir);
                std::printf("wrote %s/lift.csv (depth %d)\n", o.cfg.out_dir.c_str(), o.lift_depth);
            } else {
                std::vector<double> rows(std::size_t(s.values.rows()) * o.cfg.dim);
                for (Eigen::Index r = 0; r < s.values.rows(); ++r)
                    for (int c = 0; c < o.cfg.dim; ++c)
                        rows[std::size_t(r) * o.cfg.dim + c] = s.values(r, c);
                tfrp::PiecewiseLinearPath path(grid.points(), rows, o.cfg.dim);
                tfrp::SignatureTable table(path, grid.level);
                tfrp::SmoothField g;
                std::vector<double> y0;
                if (o.field == "constant") {
                    std::vector<double> sigma(std::size_t(o.cfg.dim) * o.cfg.dim, 0.0);
                    for (int i = 0; i < o.cfg.dim; ++i)
                        sigma[std::size_t(i) * o.cfg.dim + i] = o.cg_scale;
                    g = tfrp::constant_field(o.cfg.dim, o.cfg.dim, sigma);
                    y0.assign(std::size_t(o.cfg.dim), o.y0);
                } else if (o.field == "linear") {
                    if (o.cfg.dim != 1) throw tfrp::DomainError("linear field needs --dim 1");
                    g = tfrp::linear_scalar_field();
                    y0 = {o.y0};
                } else {
                    g = tfrp::sine_field(o.cfg.dim, o.cfg.dim, o.cg_scale);
                    y0.assign(std::size_t(o.cfg.dim), o.y0);
                }
                const int d = o.cfg.dim;
                tfrp::DriftFn f = [d](const double* y, double* out) {
                    for (int a = 0; a < d; ++a) out[a] = 1.0 - y[a];
                };
                const tfrp::DriftMethod method = (o.method == "doss_sussmann")
                                                     ? tfrp::DriftMethod::doss_sussmann
                                                     : tfrp::DriftMethod::direct;
                const auto sol = tfrp::solve_rde_with_drift(g, f, table, y0, method);
                tfrp::write_solution(sol, o.cfg.out_dir);
                tfrp::PairwiseNorms norms(table);
                const auto rep = tfrp::apriori_report(g, norms, y0, o.cfg.p);
                std::ofstream rout(std::filesystem::path(o.cfg.out_dir) / "report.txt");
                rout << rep.to_text();
                std::printf("wrote %s/solution.csv and report.txt\n", o.cfg.out_dir.c_str());
            }
        } else if (decay->parsed()) {
            const auto res = tfrp::run_decay_files(o.cfg);
            std::printf("decay: L2 slopes j=2: %.4f (ci %.4f), j=3: %.4f (ci %.4f)\n",
                        res.slope_l2_j2, res.slope_l2_j2_ci, res.slope_l2_j3, res.slope_l2_j3_ci);
        } else if (cauchy->parsed()) {
            const auto res = tfrp::run_cauchy_files(o.cfg);
            for (const auto& r : res.rows)
                std::printf("m=%d median I=%.6g fraction<=thr %.3f\n", r.m, r.median_i,
                            r.fraction_below_threshold);
        } else if (covariance->parsed()) {
            const auto res = tfrp::run_covariance_files(o.cfg);
            std::printf("covariance: max standardized deviation %.3f SE (level %d)\n",
                        res.max_abs_standardized_dev, res.grid_level);
        } else if (refine->parsed()) {
            const auto res =
                tfrp::run_rde_refinement_files(o.cfg, tfrp::test_field_from_name(o.field));
            for (const auto& r : res.rows)
                std::printf("m=%d median dist %.6g (max %.6g)\n", r.m, r.median_dist, r.max_dist);
        }
    } catch (const tfrp::DomainError& e) {
        std::fprintf(stderr, "config rejected: %s\n", e.what());
        return 2;
    } catch (const tfrp::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}

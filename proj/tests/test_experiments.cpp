#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tfrp/experiments.hpp"

using namespace tfrp;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.finest_level = 7;
    cfg.m_min = 4;
    cfg.m_max = 5;
    cfg.fixed_n = 2;
    cfg.replicas = 120;
    cfg.n_max = 5;
    cfg.seed = 99;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    ExperimentConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate_common());
    cfg.m_max = 7;
    CHECK_THROWS_AS(cfg.validate_common(), DomainError);
    cfg = small_config();
    cfg.gamma_w = 1.0;  // must exceed p - 1
    CHECK_THROWS_AS(cfg.validate_common(), DomainError);
    cfg = small_config();
    cfg.hurst = 0.2;  // outside the lemma regime
    CHECK_THROWS_AS(cfg.validate_lemma_regime(), DomainError);
    cfg = small_config();
    cfg.replicas = 50;  // rate experiments refuse with a required-R hint
    try {
        cfg.validate_lemma_regime();
        FAIL("expected rejection");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("replicas") != std::string::npos);
    }
    // Cauchy summability: H p must exceed 1 + theta
    cfg = small_config();
    cfg.hurst = 0.27;
    cfg.p = 3.5;
    cfg.theta = 0.02;
    CHECK_THROWS_AS(cfg.validate_cauchy(), DomainError);
    cfg.hurst = 0.32;
    CHECK_NOTHROW(cfg.validate_cauchy());
}

TEST_CASE("decay: level-1 deltas vanish exactly and level-2/3 moments are positive") {
    ExperimentConfig cfg = small_config();
    const auto res = run_decay(cfg);
    CHECK(res.max_abs_level1_delta == 0.0);
    for (const auto& row : res.rows) {
        if (row.level_j == 1) {
            CHECK(row.moment == 0.0);
        } else {
            CHECK(row.moment > 0.0);
            CHECK(row.l2_moment > 0.0);
        }
    }
}

TEST_CASE("cauchy: identical tables give zero, medians decrease on a small run") {
    ExperimentConfig cfg = small_config();
    cfg.hurst = 0.32;
    cfg.p = 3.3;
    cfg.replicas = 60;
    const auto res = run_cauchy(cfg);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].median_i > res.rows[1].median_i);
}

TEST_CASE("covariance smoke run stays within 6 SE") {
    ExperimentConfig cfg = small_config();
    cfg.finest_level = 4;
    cfg.replicas = 4000;
    const auto res = run_covariance(cfg);
    CHECK(res.grid_level == 4);
    CHECK(res.max_abs_standardized_dev <= 6.0);
}

TEST_CASE("refinement: constant field distance is exactly zero") {
    ExperimentConfig cfg = small_config();
    cfg.replicas = 12;
    const auto res = run_rde_refinement(cfg, TestFieldKind::constant);
    for (const auto& row : res.rows) CHECK(row.max_dist == 0.0);
}

TEST_CASE("refinement: linear field tracks the exp closed form") {
    ExperimentConfig cfg = small_config();
    cfg.finest_level = 9;
    cfg.m_min = 5;
    cfg.m_max = 7;
    cfg.replicas = 24;
    const auto res = run_rde_refinement(cfg, TestFieldKind::linear_scalar);
    CHECK(res.rows.back().closed_form_err <= 1e-2);
    CHECK(res.rows.front().median_dist > res.rows.back().median_dist);
}

TEST_CASE("experiment CSVs are byte-identical across reruns") {
    ExperimentConfig cfg = small_config();
    cfg.replicas = 40;
    cfg.svg = true;
    const auto dir1 = std::filesystem::temp_directory_path() / "tfrp_det_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "tfrp_det_b";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    cfg.out_dir = dir1.string();
    run_decay_files(cfg);
    cfg.out_dir = dir2.string();
    run_decay_files(cfg);
    CHECK(slurp(dir1 / "decay.csv") == slurp(dir2 / "decay.csv"));
    CHECK(slurp(dir1 / "decay_slopes.csv") == slurp(dir2 / "decay_slopes.csv"));
    CHECK(std::filesystem::exists(dir1 / "decay.svg"));
    CHECK(std::filesystem::exists(dir1 / "decay_manifest.json"));
    // different seed changes the CSV
    cfg.seed += 1;
    const auto dir3 = std::filesystem::temp_directory_path() / "tfrp_det_c";
    std::filesystem::remove_all(dir3);
    cfg.out_dir = dir3.string();
    run_decay_files(cfg);
    CHECK(slurp(dir1 / "decay.csv") != slurp(dir3 / "decay.csv"));
}

TEST_CASE("sample and solution files round out the export surface") {
    const auto dir = std::filesystem::temp_directory_path() / "tfrp_files";
    std::filesystem::remove_all(dir);
    const auto s = sample_tfbm(DyadicGrid(4), 0.3, 1.0, 2, 11);
    write_sample_files(s, dir);
    const std::string csv = slurp(dir / "sample.csv");
    CHECK(csv.rfind("t,comp_0,comp_1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);  // header + 17 rows
    const std::string meta = slurp(dir / "sample.json");
    CHECK(meta.find("\"hurst\"") != std::string::npos);
    CHECK(meta.find("\"seed\"") != std::string::npos);

    std::vector<double> rows(s.values.rows() * 2);
    for (Eigen::Index r = 0; r < s.values.rows(); ++r)
        for (int c = 0; c < 2; ++c) rows[std::size_t(r) * 2 + c] = s.values(r, c);
    PiecewiseLinearPath path(s.grid.points(), rows, 2);
    SignatureTable table(path, 3);
    write_signature_table(table, dir);
    const std::string lift = slurp(dir / "lift.csv");
    CHECK(lift.rfind("n,k,level,flat_index,value\n", 0) == 0);
    // rows: sum over n<=3 of 2^n entries, each 2 + 4 + 8 = 14 values
    CHECK(std::count(lift.begin(), lift.end(), '\n') == 1 + 15 * 14);

    const auto sol = solve_pure_rde(sine_field(2, 2, 0.5), table, {0.1, 0.2});
    write_solution(sol, dir);
    CHECK(slurp(dir / "solution.csv").rfind("t,y_0,y_1\n", 0) == 0);
}

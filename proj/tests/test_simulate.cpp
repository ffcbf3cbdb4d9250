#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qmle/stats.hpp"

using namespace qmle;

TEST_CASE("draw_innovations moments and reproducibility") {
    const long count = 100000;
    for (const InnovationSpec& spec :
         {InnovationSpec::gaussian(), InnovationSpec::student_t(8.0),
          InnovationSpec::rademacher()}) {
        CAPTURE(spec.kind_name());
        const MatrixXd a = draw_innovations(spec, 2, count, 77);
        const MatrixXd b = draw_innovations(spec, 2, count, 77);
        CHECK((a - b).norm() == 0.0);
        for (int k = 0; k < 2; ++k) {
            const double mean = a.col(k).mean();
            const double var = a.col(k).array().square().mean() - mean * mean;
            // 5-SE corridors around (0, 1).
            CHECK(std::fabs(mean) < 5.0 / std::sqrt(double(count)) *
                                        std::sqrt(std::max(var, 1.0)));
            const double se_var = std::sqrt((spec.m4() - 1.0) / double(count));
            CHECK(std::fabs(var - 1.0) < 5.0 * std::max(se_var, 1e-3));
        }
    }
    // Rademacher components are exactly +-1.
    const MatrixXd r = draw_innovations(InnovationSpec::rademacher(), 3, 1000, 5);
    CHECK((r.array().abs() - 1.0).abs().maxCoeff() == 0.0);
    // Gaussian fourth moment.
    const MatrixXd g = draw_innovations(InnovationSpec::gaussian(), 1, 1000000, 11);
    const double m4 = g.array().pow(4).mean();
    CHECK(std::fabs(m4 - 3.0) < 5.0 * std::sqrt(96.0 / 1e6));  // Var(xi^4) = 96
}

TEST_CASE("simulate_path is reproducible and respects dimensions") {
    for (const auto& [name, built] : test::zoo_defaults()) {
        CAPTURE(name);
        SimConfig cfg;
        cfg.n = 200;
        cfg.seed = 123;
        const Series a = simulate_path(*built.model, built.theta, InnovationSpec::gaussian(), cfg);
        const Series b = simulate_path(*built.model, built.theta, InnovationSpec::gaussian(), cfg);
        CHECK(a.n() == 200);
        CHECK(a.m() == built.model->obs_dim());
        CHECK(a.all_finite());
        CHECK((a.data - b.data).norm() == 0.0);
        cfg.seed = 124;
        const Series c = simulate_path(*built.model, built.theta, InnovationSpec::gaussian(), cfg);
        CHECK((a.data - c.data).norm() > 0.0);
    }
}

TEST_CASE("constant model produces i.i.d. output") {
    ArchInfCoeffs cc;
    cc.b0 = 0.25;  // X_t = 0.5 xi_t
    auto flat = make_arch_inf(cc);
    SimConfig cfg;
    cfg.n = 100000;
    cfg.seed = 9;
    const Series s = simulate_path(*flat.model, flat.theta, InnovationSpec::gaussian(), cfg);
    const double mean = s.data.col(0).mean();
    CHECK(std::fabs(mean) < 5.0 * 0.5 / std::sqrt(double(cfg.n)));
    const double var = s.data.col(0).array().square().mean();
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
    // Lag-1 autocorrelation of squares is noise.
    const auto sq = s.data.col(0).array().square();
    double acov = 0.0;
    for (long t = 1; t < cfg.n; ++t) acov += (sq[t] - var) * (sq[t - 1] - var);
    acov /= double(cfg.n - 1);
    CHECK(std::fabs(acov) < 5.0 * 0.25 * std::sqrt(96.0) / std::sqrt(double(cfg.n)));
}

TEST_CASE("garch unconditional variance identity") {
    // E X^2 = c0 / (1 - c1 - d1) = 1/3 for (0.1, 0.2, 0.5).
    auto garch = test::default_garch();
    SimConfig cfg;
    cfg.n = 100000;
    cfg.seed = 31;
    const Series s = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), cfg);
    const double ex2 = s.data.col(0).array().square().mean();
    // 5 SE with the empirical standard error of X^2 (dependent data: inflate
    // by an effective-sample-size factor of 3).
    const double var_x2 = s.data.col(0).array().pow(4).mean() - ex2 * ex2;
    const double se = std::sqrt(3.0 * var_x2 / double(cfg.n));
    CHECK(std::fabs(ex2 - 1.0 / 3.0) < 5.0 * se);
}

TEST_CASE("simulation is causal") {
    // Perturbing the innovation at step t+1 leaves X_1..X_t unchanged: with a
    // counter-based stream, compare a run of length t against a longer run.
    auto garch = test::default_garch();
    SimConfig full;
    full.n = 400;
    full.seed = 55;
    full.burn_in = 64;
    full.lag_truncation = 64;
    SimConfig head = full;
    head.n = 250;
    const Series a = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), full);
    const Series b = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), head);
    CHECK((a.data.topRows(250) - b.data).norm() == 0.0);
}

TEST_CASE("burn-in forgets the initial condition") {
    // Same innovations, zero vs default burn-in: after the default burn-in
    // the contraction has forgotten the start to high relative accuracy.
    auto garch = test::default_garch();
    SimConfig with;
    with.n = 100;
    with.seed = 71;
    const long J = garch.model->suggested_lag_truncation(garch.theta.values);
    SimConfig without = with;
    without.burn_in = 2 * J + 37;  // different discarded prefix
    const Series a = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), with);
    const Series b = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), without);
    // Different prefixes give different innovation alignments, so compare
    // distributional stability instead: disjoint halves of one long path.
    SimConfig longcfg;
    longcfg.n = 200000;
    longcfg.seed = 72;
    const Series s = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), longcfg);
    const long half = longcfg.n / 2;
    const double v1 = s.data.col(0).head(half).array().square().mean();
    const double v2 = s.data.col(0).tail(half).array().square().mean();
    const double var_x2 = s.data.col(0).array().pow(4).mean() -
                          std::pow(s.data.col(0).array().square().mean(), 2);
    CHECK(std::fabs(v1 - v2) < 5.0 * std::sqrt(2.0 * 3.0 * var_x2 / double(half)));
    CHECK(a.all_finite());
    CHECK(b.all_finite());
}

TEST_CASE("burn-in insensitivity via explicit initial sequences") {
    // Evaluate the one-step map from two different pasts fed the same
    // innovations; after 2J steps the paths agree to < 1e-6 relative.
    auto garch = test::default_garch();
    const Model& model = *garch.model;
    const auto ctx = model.make_ctx(garch.theta.values);
    const long J = model.suggested_lag_truncation(garch.theta.values);
    const long steps = 2 * J + 50;
    const MatrixXd xi = draw_innovations(InnovationSpec::gaussian(), 1, steps, 313);
    auto run = [&](double init) {
        Series path;
        path.data = MatrixXd::Zero(steps, 1);
        std::vector<VectorXd> u{(VectorXd(1) << init).finished()};
        VectorXd f(1);
        MatrixXd M(1, 1);
        for (long t = 1; t <= steps; ++t) {
            History h(path, t, &u, J);
            model.f(*ctx, h, f);
            model.M(*ctx, h, M);
            path.data.row(t - 1) = (M * xi.row(t - 1).transpose() + f).transpose();
        }
        return path;
    };
    const Series p0 = run(0.0), p1 = run(5.0);
    const double tail_gap = (p0.data.bottomRows(50) - p1.data.bottomRows(50)).norm();
    CHECK(tail_gap / p0.data.bottomRows(50).norm() < 1e-6);
}

TEST_CASE("region gate and override") {
    auto garch = make_garch({0.1, {0.6}, {0.5}});  // c1 + d1 > 1: outside
    SimConfig cfg;
    cfg.n = 50;
    cfg.seed = 3;
    CHECK_THROWS_AS(
        (void)simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), cfg),
        RegionError);
    cfg.override_region_check = true;
    cfg.lag_truncation = 50;
    // Mildly explosive settings still produce finite short paths.
    const Series s = simulate_path(*garch.model, garch.theta, InnovationSpec::gaussian(), cfg);
    CHECK(s.n() == 50);
}

TEST_CASE("series csv and binary round trips") {
    auto mv = test::default_mvarch();
    const Series s = test::short_path(mv, InnovationSpec::gaussian(), 137, 21);
    const std::string csv = "/tmp/qmle_test_series.csv";
    const std::string qsb = "/tmp/qmle_test_series.qsb";
    write_series(csv, s);
    write_series(qsb, s);
    const Series rc = read_series(csv);
    const Series rb = read_series(qsb);
    CHECK(rc.n() == s.n());
    CHECK(rc.m() == s.m());
    CHECK((rc.data - s.data).norm() == 0.0);  // 17 significant digits
    CHECK((rb.data - s.data).norm() == 0.0);
}

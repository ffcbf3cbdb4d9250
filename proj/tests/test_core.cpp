#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qmle/stats.hpp"

using namespace qmle;
using test::NamedModel;

namespace {

std::vector<VectorXd> scalar_window(std::initializer_list<double> xs) {
    std::vector<VectorXd> w;
    for (double x : xs) w.push_back((VectorXd(1) << x).finished());
    return w;
}

}  // namespace

TEST_CASE("rng is counter-based and reproducible") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    // Uniform draws stay strictly inside (0,1).
    Rng c(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = c.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    // The quantile function inverts the normal CDF.
    for (double p : {0.01, 0.1, 0.5, 0.9, 0.975}) {
        CHECK(normal_cdf(Rng::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(Rng::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    // Derived streams differ.
    CHECK(Rng::derive(1, 0) != Rng::derive(1, 1));
    CHECK(Rng::derive(1, 0) != Rng::derive(2, 0));
}

TEST_CASE("innovation moment functionals") {
    const InnovationSpec g = InnovationSpec::gaussian();
    CHECK(g.abs_moment(2) == doctest::Approx(1.0));
    CHECK(g.abs_moment(4) == doctest::Approx(3.0));
    CHECK(g.m4() == doctest::Approx(3.0));
    // ||xi||^r moments via the chi distribution: E||xi||^2 = p.
    for (int p : {1, 2, 5}) CHECK(g.norm_moment(p, 2.0) == doctest::Approx(std::sqrt(double(p))));

    const InnovationSpec r = InnovationSpec::rademacher();
    CHECK(r.abs_moment(1) == doctest::Approx(1.0));
    CHECK(r.abs_moment(4) == doctest::Approx(1.0));
    CHECK(r.m4() == doctest::Approx(1.0));

    const InnovationSpec t = InnovationSpec::student_t(10.0);
    CHECK(t.abs_moment(2) == doctest::Approx(1.0));   // standardized
    CHECK(t.m4() > 3.0);                               // heavier tails than Gaussian
    CHECK_THROWS_AS((void)InnovationSpec::student_t(10.0).abs_moment(10.5), ContractError);
}

TEST_CASE("eval_f fixed points") {
    // ARCH-type model: f identically zero.
    auto garch = test::default_garch();
    const Series s{MatrixXd::Random(10, 1)};
    History h(s, 11, nullptr, -1);
    CHECK(eval_f(*garch.model, garch.theta, h).norm() == 0.0);

    // Intercept-only nonlinear AR at the zero history.
    NlarCoeffs nc;
    nc.a0 = (VectorXd(2) << 0.7, -0.3).finished();
    nc.A.push_back(MatrixXd::Zero(2, 2));
    auto nlar0 = make_nlar(nc);
    std::vector<VectorXd> empty;
    CHECK((eval_f(*nlar0.model, nlar0.theta, History(empty, 2)) - nc.a0).norm() == 0.0);

    // Linear AR(1): f(x) = 0.5 * x_1, history (2.0, ...) -> 1.0.
    NlarCoeffs ar1;
    ar1.a0 = VectorXd::Zero(1);
    ar1.A.push_back((MatrixXd(1, 1) << 0.5).finished());
    auto nlar1 = make_nlar(ar1);
    auto w = scalar_window({2.0, -3.0, 7.0});
    CHECK(eval_f(*nlar1.model, nlar1.theta, History(w, 1))[0] == doctest::Approx(1.0));
}

TEST_CASE("eval_H fixed points") {
    // Constant conditional variance.
    ArchInfCoeffs cc;
    cc.b0 = 0.1;
    auto flat = make_arch_inf(cc);
    std::vector<VectorXd> empty;
    CHECK(eval_H(*flat.model, flat.theta, History(empty, 1))(0, 0) == doctest::Approx(0.1));

    // One-lag ARCH: H = b0 + b1 x_1^2.
    ArchInfCoeffs ac;
    ac.b0 = 0.1;
    ac.b = {0.3};
    ac.decay = DecayTag::finite(1);
    auto arch = make_arch_inf(ac);
    auto w = scalar_window({2.0});
    CHECK(eval_H(*arch.model, arch.theta, History(w, 1))(0, 0) == doctest::Approx(1.3));

    // BEKK with no dynamic terms: H = C0 C0'.
    BekkCoeffs bc;
    bc.C0 = (MatrixXd(2, 2) << 0.5, 0.0, 0.2, 0.4).finished();
    auto bekk = make_bekk(bc);
    std::vector<VectorXd> empty2;
    const MatrixXd H = eval_H(*bekk.model, bekk.theta, History(empty2, 2));
    CHECK((H - bc.C0 * bc.C0.transpose()).norm() < 1e-14);

    // Symmetry after symmetrization, exactly.
    auto mv = test::default_mvarch();
    Rng rng(3);
    std::vector<VectorXd> w2{(VectorXd(2) << rng.next_gaussian(), rng.next_gaussian()).finished()};
    const MatrixXd Hm = eval_H(*mv.model, mv.theta, History(w2, 2));
    CHECK((Hm - Hm.transpose()).norm() == 0.0);
}

TEST_CASE("eval_H enforces the determinant floor") {
    ArchInfCoeffs cc;
    cc.b0 = 0.1;
    cc.decay = DecayTag::finite(0);
    auto tiny = make_arch_inf(cc);
    // A parameter box may legitimately reach below the eval-time floor; the
    // floor is enforced at evaluation, not at construction.
    ParamVector theta((VectorXd(1) << 1e-12).finished(),
                      VectorXd::Zero(1), VectorXd::Ones(1));
    std::vector<VectorXd> empty;
    CHECK_THROWS_AS((void)eval_H(*tiny.model, theta, History(empty, 1)), A2ViolationError);
}

TEST_CASE("contraction values: closed forms") {
    const InnovationSpec g = InnovationSpec::gaussian();

    // GARCH(1,1) (0.1, 0.2, 0.5) at r = 2: sum b_j = c1/(1-d1) = 0.4.
    auto garch = test::default_garch();
    CHECK(contraction_value(*garch.model, garch.theta.values, g, 2.0) ==
          doctest::Approx(0.4).epsilon(1e-10));
    CHECK(in_theta_region(*garch.model, garch.theta.values, g, 2.0));

    // Boundary c1 + d1 = 1 is excluded (strict inequality).
    const VectorXd half = (VectorXd(3) << 0.1, 0.5, 0.5).finished();
    CHECK_FALSE(in_theta_region(*garch.model, half, g, 2.0));

    // r = 4 Gaussian: 3 (c1/(1-d1))^2 = 0.48 < 1.
    CHECK(contraction_value(*garch.model, garch.theta.values, g, 4.0) ==
          doctest::Approx(0.48).epsilon(1e-9));
    CHECK(in_theta_region(*garch.model, garch.theta.values, g, 4.0));

    // All alpha zero: constant model evaluates to 0.
    ArchInfCoeffs cc;
    cc.b0 = 0.1;
    auto flat = make_arch_inf(cc);
    CHECK(contraction_value(*flat.model, flat.theta.values, g, 2.0) == 0.0);
}

TEST_CASE("r = 2 M-route coefficient is sqrt(p)") {
    // For unit-variance uncorrelated innovations the generic moment path must
    // reduce to sqrt(p) on sum alpha(M).
    auto nlarch = test::default_nlarch();
    const InnovationSpec g = InnovationSpec::gaussian();
    double sum_m = 0.0, sum_f = 0.0;
    for (long j = 1; j <= 8; ++j) {
        sum_m += nlarch.model->alpha(Psi::M, 0, nlarch.theta.values, j);
        sum_f += nlarch.model->alpha(Psi::F, 0, nlarch.theta.values, j);
    }
    const double closed = sum_f + std::sqrt(2.0) * sum_m;
    CHECK(contraction_value(*nlarch.model, nlarch.theta.values, g, 2.0) ==
          doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("contraction value is nondecreasing in r") {
    const InnovationSpec g = InnovationSpec::gaussian();
    const InnovationSpec t = InnovationSpec::student_t(12.0);
    for (const auto& [name, built] : test::zoo_defaults()) {
        CAPTURE(name);
        for (const InnovationSpec& innov : {g, t}) {
            double prev = -1.0;
            for (double r : {2.0, 3.0, 4.0}) {
                if (innov.kind == InnovationSpec::Kind::StudentT && r >= innov.nu) continue;
                const double v = contraction_value(*built.model, built.theta.values, innov, r);
                CHECK(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}

TEST_CASE("declared Lipschitz coefficients bound one-lag differences") {
    // 1000 random history pairs differing in a single lag, across the zoo.
    Rng rng(0xC0FFEE);
    for (const auto& [name, built] : test::zoo_defaults()) {
        CAPTURE(name);
        const Model& model = *built.model;
        const int m = model.obs_dim();
        const auto ctx = model.make_ctx(built.theta.values);
        const int trials = 1000 / 8;
        for (int trial = 0; trial < trials; ++trial) {
            const long L = 1 + (rng.next_u64() % 6);
            const long j = 1 + (rng.next_u64() % L);
            std::vector<VectorXd> x(L), y;
            for (auto& v : x) {
                v.resize(m);
                for (int k = 0; k < m; ++k) v[k] = rng.next_gaussian();
            }
            y = x;
            for (int k = 0; k < m; ++k) y[j - 1][k] = rng.next_gaussian();

            VectorXd fx(m), fy(m);
            model.f(*ctx, History(x, m), fx);
            model.f(*ctx, History(y, m), fy);
            const double af = model.alpha(Psi::F, 0, built.theta.values, j);
            CHECK((fx - fy).norm() <= af * (x[j - 1] - y[j - 1]).norm() + 1e-10);
        }
    }
}

TEST_CASE("full-rank M check") {
    auto bekk = test::default_bekk();
    CHECK(check_full_rank_M(*bekk.model, bekk.theta.values));
    auto nlar = test::default_nlar();  // M = I
    CHECK(check_full_rank_M(*nlar.model, nlar.theta.values));
}

TEST_CASE("alpha_sum against direct summation") {
    for (const auto& [name, built] : test::zoo_defaults()) {
        CAPTURE(name);
        const Model& model = *built.model;
        for (Psi psi : {Psi::F, Psi::M, Psi::H}) {
            const double s = model.alpha_sum(psi, 0, built.theta.values);
            double direct = 0.0;
            for (long j = 1; j <= 4000; ++j)
                direct += model.alpha(psi, 0, built.theta.values, j);
            CHECK(s == doctest::Approx(direct).epsilon(1e-7));
        }
    }
}

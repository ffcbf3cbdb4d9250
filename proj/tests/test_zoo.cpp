#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "qmle/zoo/expansions.hpp"

using namespace qmle;

TEST_CASE("garch_to_arch_coeffs closed cases") {
    // c0=0.1, c1=0.2, d1=0.5: b0 = 0.2, b_j = 0.2 * 0.5^(j-1).
    const auto e = garch_to_arch_coeffs({0.1, {0.2}, {0.5}}, 200);
    CHECK(e.b0 == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(e.b[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(e.b[1] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.b[2] == doctest::Approx(0.05).epsilon(1e-14));

    // d == 0: b_j = c_j up to q, zero after.
    const auto pure = garch_to_arch_coeffs({0.3, {0.1, 0.2}, {}}, 10);
    CHECK(pure.b0 == doctest::Approx(0.3));
    CHECK(pure.b[0] == doctest::Approx(0.1));
    CHECK(pure.b[1] == doctest::Approx(0.2));
    for (std::size_t j = 2; j < pure.b.size(); ++j) CHECK(pure.b[j] == 0.0);

    // q=2, q'=1 recursion unrolled: b1=c1, b2=c2+d1 c1, b3=d1 b2.
    const double c1 = 0.15, c2 = 0.1, d1 = 0.4;
    const auto two = garch_to_arch_coeffs({0.1, {c1, c2}, {d1}}, 10);
    CHECK(two.b[0] == doctest::Approx(c1).epsilon(1e-14));
    CHECK(two.b[1] == doctest::Approx(c2 + d1 * c1).epsilon(1e-14));
    CHECK(two.b[2] == doctest::Approx(d1 * (c2 + d1 * c1)).epsilon(1e-14));

    CHECK_THROWS_AS((void)garch_to_arch_coeffs({0.1, {0.2}, {0.6, 0.4}}, 10),
                    DivergenceError);
}

TEST_CASE("garch_to_arch_coeffs matches power-series long division") {
    // c(z) / (1 - d(z)) expanded by brute-force division over 200 lags.
    const GarchCoeffs g{0.05, {0.12, 0.08}, {0.45, 0.25}};
    const long J = 200;
    const auto e = garch_to_arch_coeffs(g, J);
    std::vector<double> div(J + 1, 0.0);
    for (long j = 1; j <= J; ++j) {
        double num = j <= static_cast<long>(g.c.size()) ? g.c[j - 1] : 0.0;
        for (std::size_t k = 1; k <= g.d.size() && static_cast<long>(k) < j; ++k)
            num += g.d[k - 1] * div[j - k];
        div[j] = num;
    }
    for (long j = 1; j <= J; ++j) CHECK(std::fabs(e.b[j - 1] - div[j]) < 1e-12);
}

TEST_CASE("garch polynomial coprimality") {
    CHECK(garch_polynomials_coprime({0.1, {0.2}, {0.5}}));
    // c(z) = 0.2 z (1 - 0.5 z) shares the root 2 with 1 - 0.5 z.
    CHECK_FALSE(garch_polynomials_coprime({0.1, {0.2, -0.1}, {0.5}}));
}

TEST_CASE("bekk expansion fixed points") {
    // q=1, q'=0: A*_1 = C*_1 = C1 (x) C1, later terms zero.
    BekkCoeffs b;
    b.C0 = MatrixXd::Identity(2, 2);
    b.C.push_back((MatrixXd(2, 2) << 0.3, 0.1, 0.0, 0.2).finished());
    const auto e = bekk_expand(b, 5);
    CHECK((e.A_star[0] - kron_square(b.C[0])).norm() < 1e-14);
    for (int j = 1; j < 5; ++j) CHECK(e.A_star[j].norm() == 0.0);
    CHECK((e.B0 - MatrixXd::Identity(2, 2)).norm() < 1e-14);

    // m=1 reduces exactly to the scalar GARCH expansion on squares.
    BekkCoeffs s;
    s.C0 = (MatrixXd(1, 1) << std::sqrt(0.1)).finished();
    s.C.push_back((MatrixXd(1, 1) << std::sqrt(0.2)).finished());
    s.D.push_back((MatrixXd(1, 1) << std::sqrt(0.5)).finished());
    const auto se = bekk_expand(s, 50);
    const auto ge = garch_to_arch_coeffs({0.1, {0.2}, {0.5}}, 50);
    CHECK(se.B0(0, 0) == doctest::Approx(ge.b0).epsilon(1e-12));
    for (int j = 0; j < 50; ++j)
        CHECK(se.A_star[j](0, 0) == doctest::Approx(ge.b[j]).epsilon(1e-12));
}

TEST_CASE("bekk expansion decays at the feedback spectral radius") {
    BekkCoeffs b;
    b.C0 = MatrixXd::Identity(2, 2);
    b.C.push_back((MatrixXd(2, 2) << 0.3, 0.05, 0.02, 0.25).finished());
    // D*_1 = D1 (x) D1 has spectral radius rho(D1)^2; pick rho(D1)^2 ~ 0.5.
    const double s = std::sqrt(0.5);
    b.D.push_back((MatrixXd(2, 2) << s, 0.0, 0.0, s * 0.9).finished());
    const auto e = bekk_expand(b, 60);
    for (int j = 20; j < 59; ++j) {
        if (e.A_star[j].norm() < 1e-300) continue;
        CHECK(e.A_star[j + 1].norm() / e.A_star[j].norm() < 0.5 + 0.05);
    }
}

TEST_CASE("bekk expansion satisfies the defining operator identity") {
    // A*_i = C*_i + sum_k D*_k A*_{i-k}, checked at 50 random unit-disc
    // arguments of the generating function.
    auto built = test::default_bekk();
    BekkCoeffs b;
    b.C0 = (MatrixXd(2, 2) << 0.3, 0.0, 0.1, 0.3).finished();
    b.C.push_back((MatrixXd(2, 2) << 0.3, 0.05, 0.02, 0.25).finished());
    b.D.push_back((MatrixXd(2, 2) << 0.4, 0.0, 0.0, 0.35).finished());
    const long J = 400;
    const auto e = bekk_expand(b, J);
    using CMat = Eigen::MatrixXcd;
    const CMat Cstar = kron_square(b.C[0]).cast<std::complex<double>>();
    const CMat Dstar = kron_square(b.D[0]).cast<std::complex<double>>();
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const double radius = 0.9 * std::sqrt(rng.next_uniform());
        const double angle = 2.0 * M_PI * rng.next_uniform();
        const std::complex<double> z = std::polar(radius, angle);
        // A(z) = sum A*_j z^j must satisfy (I - D*(z)) A(z) = C*(z).
        CMat Az = CMat::Zero(4, 4);
        std::complex<double> zj = 1.0;
        for (long j = 1; j <= J; ++j) {
            zj *= z;
            Az += zj * e.A_star[j - 1].cast<std::complex<double>>();
        }
        const CMat lhs = Az - z * (Dstar * Az);
        const CMat rhs = z * Cstar;
        CHECK((lhs - rhs).norm() < 1e-9);
    }
}

TEST_CASE("arma expansion fixed points and operator identity") {
    const MatrixXd phi = (MatrixXd(1, 1) << 0.4).finished();
    const MatrixXd psi = (MatrixXd(1, 1) << 0.2).finished();

    // Psi == identity polynomial: Gamma_i = -Phi_i.
    const auto noma = arma_to_ar_coeffs({phi}, {}, 1, 5);
    CHECK(noma[0](0, 0) == doctest::Approx(-0.4).epsilon(1e-14));
    for (int j = 1; j < 5; ++j) CHECK(noma[j].norm() == 0.0);

    // Phi == Psi: Gamma identically zero.
    const auto same = arma_to_ar_coeffs({phi}, {phi}, 1, 5);
    for (const auto& g : same) CHECK(g.norm() < 1e-14);

    // Scalar pattern Gamma_i = psi^(i-1) (psi - phi).
    const auto g = arma_to_ar_coeffs({phi}, {psi}, 1, 30);
    for (int i = 1; i <= 30; ++i)
        CHECK(g[i - 1](0, 0) ==
              doctest::Approx(std::pow(0.2, i - 1) * (0.2 - 0.4)).epsilon(1e-12));

    // Operator identity Psi(z) Gamma(z) = Phi(z) at random unit-disc points.
    const MatrixXd P1 = (MatrixXd(2, 2) << 0.3, 0.1, 0.0, 0.2).finished();
    const MatrixXd Q1 = (MatrixXd(2, 2) << 0.1, 0.0, 0.05, 0.15).finished();
    const auto gm = arma_to_ar_coeffs({P1}, {Q1}, 2, 300);
    using CMat = Eigen::MatrixXcd;
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::complex<double> z =
            std::polar(0.8 * std::sqrt(rng.next_uniform()), 2.0 * M_PI * rng.next_uniform());
        CMat Gz = CMat::Identity(2, 2);
        std::complex<double> zj = 1.0;
        for (long j = 1; j <= 300; ++j) {
            zj *= z;
            Gz += zj * gm[j - 1].cast<std::complex<double>>();
        }
        const CMat Psiz = CMat::Identity(2, 2) - z * Q1.cast<std::complex<double>>();
        const CMat Phiz = CMat::Identity(2, 2) - z * P1.cast<std::complex<double>>();
        CHECK((Psiz * Gz - Phiz).norm() < 1e-9);
    }
}

TEST_CASE("zoo fixed points") {
    const InnovationSpec g = InnovationSpec::gaussian();

    // GARCH(1,1) r=2 condition reduces to c1 + d1 < 1.
    auto garch = make_garch({0.1, {0.2}, {0.5}});
    CHECK(in_theta_region(*garch.model, garch.theta.values, g, 2.0));

    // BEKK with q=q'=0: constant H.
    BekkCoeffs bc;
    bc.C0 = (MatrixXd(2, 2) << 0.4, 0.0, 0.1, 0.5).finished();
    auto bekk = make_bekk(bc);
    CHECK(contraction_value(*bekk.model, bekk.theta.values, g, 2.0) == 0.0);
}

TEST_CASE("tarch with equal branches collapses to ARCH on |X|") {
    auto tarch = make_tarch({0.1, {0.3, 0.15}, {0.3, 0.15}});
    const auto ctx = tarch.model->make_ctx(tarch.theta.values);
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<VectorXd> w(3);
        for (auto& v : w) v = (VectorXd(1) << 2.0 * rng.next_gaussian()).finished();
        MatrixXd H(1, 1);
        tarch.model->H(*ctx, History(w, 1), H);
        // sigma = b0 + sum b_j |x_j|, H = sigma^2.
        const double sigma =
            0.1 + 0.3 * std::fabs(w[0][0]) + 0.15 * std::fabs(w[1][0]);
        CHECK(H(0, 0) == doctest::Approx(sigma * sigma).epsilon(1e-12));
    }
}

TEST_CASE("nlarch with m = 1 reduces to scalar tarch") {
    auto tarch = make_tarch({0.2, {0.3}, {0.1}});
    NlarchCoeffs nc;
    nc.B0 = (VectorXd(1) << 0.2).finished();
    nc.B_plus.push_back((MatrixXd(1, 1) << 0.3).finished());
    nc.B_minus.push_back((MatrixXd(1, 1) << 0.1).finished());
    auto nlarch = make_nlarch(nc);
    const auto tctx = tarch.model->make_ctx(tarch.theta.values);
    const auto nctx = nlarch.model->make_ctx(nlarch.theta.values);
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<VectorXd> w{(VectorXd(1) << 3.0 * rng.next_gaussian()).finished()};
        MatrixXd Ht(1, 1), Hn(1, 1);
        tarch.model->H(*tctx, History(w, 1), Ht);
        nlarch.model->H(*nctx, History(w, 1), Hn);
        CHECK(Ht(0, 0) == doctest::Approx(Hn(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("power-law decay tags are honest") {
    // alpha_j * j^ell stays bounded over j <= 1e4.
    ArchInfCoeffs c;
    c.b0 = 0.1;
    c.power_law = true;
    c.scale = 0.4;
    c.ell = 3.0;
    c.decay = DecayTag::polynomial(3.0);
    auto built = make_arch_inf(c);
    double worst = 0.0;
    for (long j = 1; j <= 10000; j = j < 100 ? j + 1 : j * 2) {
        const double a = built.model->alpha(Psi::H, 0, built.theta.values, j);
        worst = std::max(worst, a * std::pow(double(j), 3.0));
    }
    CHECK(worst < 10.0 * 0.4);
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS((void)make_garch({-0.1, {0.2}, {0.5}}), ContractError);
    CHECK_THROWS_AS((void)make_garch({0.1, {0.2}, {1.1}}), ContractError);
    BekkCoeffs bad;
    bad.C0 = (MatrixXd(2, 2) << 0.3, 0.2, 0.1, 0.3).finished();  // upper entry
    CHECK_THROWS_AS((void)make_bekk(bad), ContractError);
}

TEST_CASE("model json round trip for every family") {
    for (const auto& [name, built] : test::zoo_defaults()) {
        CAPTURE(name);
        ModelConfig cfg;
        cfg.family = name;
        cfg.innov = InnovationSpec::gaussian();
        if (name == "arch_inf") cfg.coeffs = ArchInfCoeffs{0.1, {0.3}, false, 0, 0, DecayTag::finite(1)};
        else if (name == "garch") cfg.coeffs = GarchCoeffs{0.1, {0.2}, {0.5}};
        else if (name == "tarch") cfg.coeffs = TarchCoeffs{0.1, {0.25}, {0.15}};
        else if (name == "mvarch") cfg.coeffs = MvArchCoeffs{
            (MatrixXd(2, 2) << 0.3, 0.05, 0.05, 0.2).finished(),
            {(MatrixXd(2, 2) << 0.25, 0.0, 0.0, 0.2).finished()}};
        else if (name == "bekk") cfg.coeffs = BekkCoeffs{
            (MatrixXd(2, 2) << 0.3, 0.0, 0.1, 0.3).finished(),
            {(MatrixXd(2, 2) << 0.3, 0.05, 0.02, 0.25).finished()},
            {(MatrixXd(2, 2) << 0.4, 0.0, 0.0, 0.35).finished()}};
        else if (name == "nlarch") cfg.coeffs = NlarchCoeffs{
            (VectorXd(2) << 0.3, 0.4).finished(),
            {(MatrixXd(2, 2) << 0.2, 0.05, 0.0, 0.15).finished()},
            {(MatrixXd(2, 2) << 0.1, 0.0, 0.05, 0.2).finished()}};
        else if (name == "nlar") cfg.coeffs = NlarCoeffs{
            (VectorXd(2) << 0.1, -0.2).finished(),
            {(MatrixXd(2, 2) << 0.3, 0.1, 0.0, 0.25).finished(),
             (MatrixXd(2, 2) << 0.1, 0.0, 0.0, 0.05).finished()}};
        else cfg.coeffs = ArmaGarchCoeffs{
            {(MatrixXd(1, 1) << 0.4).finished()}, {(MatrixXd(1, 1) << 0.2).finished()},
            (VectorXd(1) << 0.1).finished(), {(MatrixXd(1, 1) << 0.2).finished()},
            {(MatrixXd(1, 1) << 0.3).finished()}};

        const json doc = model_config_to_json(cfg);
        const ModelConfig back = model_config_from_json(doc);
        CHECK(model_config_to_json(back) == doc);
        const BuiltModel a = cfg.build(), b = back.build();
        CHECK((a.theta.values - b.theta.values).norm() == 0.0);
        CHECK(a.model->family() == b.model->family());
    }
}

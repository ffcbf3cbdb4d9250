#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qmle/json_io.hpp"
#include "qmle/likelihood.hpp"
#include "qmle/simulate.hpp"
#include "qmle/zoo/zoo.hpp"

namespace qmle::test {

// One in-region representative per family, reused across suites.
inline BuiltModel default_arch_inf() {
    ArchInfCoeffs c;
    c.b0 = 0.1;
    c.b = {0.4};
    c.decay = DecayTag::finite(1);
    return make_arch_inf(c);
}

inline BuiltModel default_garch() { return make_garch({0.1, {0.2}, {0.5}}); }

inline BuiltModel default_tarch() { return make_tarch({0.1, {0.25}, {0.15}}); }

inline BuiltModel default_mvarch() {
    MvArchCoeffs c;
    c.B0 = (MatrixXd(2, 2) << 0.3, 0.05, 0.05, 0.2).finished();
    c.B.push_back((MatrixXd(2, 2) << 0.25, 0.0, 0.0, 0.2).finished());
    return make_mvarch(c);
}

inline BuiltModel default_bekk() {
    BekkCoeffs c;
    c.C0 = (MatrixXd(2, 2) << 0.3, 0.0, 0.1, 0.3).finished();
    c.C.push_back((MatrixXd(2, 2) << 0.3, 0.05, 0.02, 0.25).finished());
    c.D.push_back((MatrixXd(2, 2) << 0.4, 0.0, 0.0, 0.35).finished());
    return make_bekk(c);
}

inline BuiltModel default_nlarch() {
    NlarchCoeffs c;
    c.B0 = (VectorXd(2) << 0.3, 0.4).finished();
    c.B_plus.push_back((MatrixXd(2, 2) << 0.2, 0.05, 0.0, 0.15).finished());
    c.B_minus.push_back((MatrixXd(2, 2) << 0.1, 0.0, 0.05, 0.2).finished());
    return make_nlarch(c);
}

inline BuiltModel default_nlar() {
    NlarCoeffs c;
    c.a0 = (VectorXd(2) << 0.1, -0.2).finished();
    c.A.push_back((MatrixXd(2, 2) << 0.3, 0.1, 0.0, 0.25).finished());
    c.A.push_back((MatrixXd(2, 2) << 0.1, 0.0, 0.0, 0.05).finished());
    return make_nlar(c);
}

inline BuiltModel default_arma_garch() {
    ArmaGarchCoeffs c;
    c.Phi.push_back((MatrixXd(1, 1) << 0.4).finished());
    c.Psi.push_back((MatrixXd(1, 1) << 0.2).finished());
    c.c0 = (VectorXd(1) << 0.1).finished();
    c.C.push_back((MatrixXd(1, 1) << 0.2).finished());
    c.D.push_back((MatrixXd(1, 1) << 0.3).finished());
    return make_arma_garch(c);
}

struct NamedModel {
    std::string name;
    BuiltModel built;
};

inline std::vector<NamedModel> zoo_defaults() {
    return {{"arch_inf", default_arch_inf()}, {"garch", default_garch()},
            {"tarch", default_tarch()},       {"mvarch", default_mvarch()},
            {"bekk", default_bekk()},         {"nlarch", default_nlarch()},
            {"nlar", default_nlar()},         {"arma_garch", default_arma_garch()}};
}

// Central finite differences of the quasi-likelihood in theta.
inline VectorXd fd_score(const Model& model, const VectorXd& theta, const Series& data,
                         const LikOptions& opts = {}, double scale = 1e-6) {
    const int d = static_cast<int>(theta.size());
    VectorXd g(d);
    for (int i = 0; i < d; ++i) {
        const double h = std::max(scale, scale * std::fabs(theta[i]));
        VectorXd tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        g[i] = (quasi_loglik(model, tp, data, opts) - quasi_loglik(model, tm, data, opts)) /
               (2.0 * h);
    }
    return g;
}

// Central finite differences of the analytic score: d^2 L / dtheta dtheta'.
inline MatrixXd fd_hessian(const Model& model, const VectorXd& theta, const Series& data,
                           const LikOptions& opts = {}, double scale = 1e-5) {
    const int d = static_cast<int>(theta.size());
    MatrixXd hess(d, d);
    for (int i = 0; i < d; ++i) {
        const double h = std::max(scale, scale * std::fabs(theta[i]));
        VectorXd tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        hess.col(i) =
            (score(model, tp, data, opts) - score(model, tm, data, opts)) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

// A short in-region path for derivative checks.
inline Series short_path(const BuiltModel& built, const InnovationSpec& innov, long n,
                         std::uint64_t seed) {
    SimConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return simulate_path(*built.model, built.theta, innov, cfg);
}

// Random in-box, in-region theta near theta0 (shrinks toward theta0 until
// the region test passes).
inline VectorXd random_in_region(const BuiltModel& built, const InnovationSpec& innov,
                                 double r, Rng& rng, double spread = 0.25) {
    const VectorXd& t0 = built.theta.values;
    for (int attempt = 0; attempt < 64; ++attempt) {
        VectorXd th = t0;
        const double s = spread / (1 << std::min(attempt / 8, 6));
        for (int i = 0; i < th.size(); ++i) {
            const double width = built.theta.hi[i] - built.theta.lo[i];
            th[i] += s * width * (rng.next_uniform() - 0.5);
            th[i] = std::min(std::max(th[i], built.theta.lo[i]), built.theta.hi[i]);
        }
        try {
            if (in_theta_region(*built.model, th, innov, r)) return th;
        } catch (const std::exception&) {
        }
    }
    return t0;
}

}  // namespace qmle::test

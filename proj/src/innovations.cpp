#include "qmle/innovations.hpp"

#include <cmath>

#include "qmle/errors.hpp"

namespace qmle {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// Marsaglia-Tsang, shape a >= 1, scale 1. Rejection consumes a variable
// number of draws; deterministic given the stream position.
double draw_gamma(Rng& rng, double a) {
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.next_gaussian();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.next_uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

}  // namespace

InnovationSpec InnovationSpec::student_t(double nu) {
    if (!(nu > 2.0)) throw ContractError("student_t: nu must exceed 2 (unit variance undefined)");
    InnovationSpec s;
    s.kind = Kind::StudentT;
    s.nu = nu;
    return s;
}

double InnovationSpec::abs_moment(double r) const {
    if (r < 0) throw ContractError("abs_moment: r must be >= 0");
    switch (kind) {
        case Kind::Gaussian:
            return std::pow(2.0, r / 2.0) * std::tgamma((r + 1.0) / 2.0) / kSqrtPi;
        case Kind::Rademacher:
            return 1.0;
        case Kind::StudentT: {
            if (!(nu > 2.0)) throw ContractError("student_t: nu must exceed 2");
            if (!(nu > r))
                throw ContractError("student_t: E|xi|^r requires nu > r");
            // E|T|^r for T ~ t_nu, then scaled by ((nu-2)/nu)^{r/2} to unit variance.
            const double logm = 0.5 * r * std::log(nu) + std::lgamma((r + 1.0) / 2.0) +
                                std::lgamma((nu - r) / 2.0) - std::log(kSqrtPi) -
                                std::lgamma(nu / 2.0);
            return std::exp(logm) * std::pow((nu - 2.0) / nu, r / 2.0);
        }
    }
    throw ContractError("abs_moment: unknown kind");
}

double InnovationSpec::m4() const {
    switch (kind) {
        case Kind::Gaussian:
            return 3.0;
        case Kind::Rademacher:
            return 1.0;
        case Kind::StudentT:
            if (!(nu > 4.0)) throw ContractError("student_t: m4 requires nu > 4");
            return 3.0 * (nu - 2.0) / (nu - 4.0);
    }
    throw ContractError("m4: unknown kind");
}

double InnovationSpec::norm_moment(int p, double r) const {
    if (p < 1) throw ContractError("norm_moment: p must be >= 1");
    if (p == 1) return std::pow(abs_moment(r), 1.0 / r);
    if (kind == Kind::Gaussian) {
        // ||xi|| is chi with p degrees of freedom.
        const double logm = 0.5 * r * std::log(2.0) + std::lgamma((p + r) / 2.0) -
                            std::lgamma(p / 2.0);
        return std::exp(logm / r);
    }
    if (kind == Kind::Rademacher) return std::sqrt(static_cast<double>(p));
    // Uncorrelated unit-variance components give E||xi||^2 = p exactly, and
    // E||xi||^4 = p*m4 + p(p-1) under component independence.
    if (r == 2.0) return std::sqrt(static_cast<double>(p));
    if (r == 4.0) return std::pow(p * m4() + p * (p - 1.0), 0.25);
    // Monte Carlo fallback, fixed seed for reproducibility.
    Rng rng(mc_seed);
    Eigen::VectorXd xi(p);
    double acc = 0.0;
    for (long i = 0; i < mc_draws; ++i) {
        draw(rng, p, xi);
        acc += std::pow(xi.norm(), r);
    }
    return std::pow(acc / static_cast<double>(mc_draws), 1.0 / r);
}

void InnovationSpec::draw(Rng& rng, int p, Eigen::VectorXd& out) const {
    out.resize(p);
    switch (kind) {
        case Kind::Gaussian:
            for (int k = 0; k < p; ++k) out[k] = rng.next_gaussian();
            return;
        case Kind::Rademacher:
            for (int k = 0; k < p; ++k) out[k] = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
            return;
        case Kind::StudentT: {
            if (!(nu > 2.0)) throw ContractError("student_t draw: nu must exceed 2");
            for (int k = 0; k < p; ++k) {
                const double z = rng.next_gaussian();
                const double w = 2.0 * draw_gamma(rng, nu / 2.0);  // chi^2_nu
                out[k] = z * std::sqrt((nu - 2.0) / w);
            }
            return;
        }
    }
    throw ContractError("draw: unknown kind");
}

std::string InnovationSpec::kind_name() const {
    switch (kind) {
        case Kind::Gaussian: return "standard_gaussian";
        case Kind::StudentT: return "standardized_student_t";
        case Kind::Rademacher: return "rademacher_product";
    }
    return "?";
}

InnovationSpec::Kind InnovationSpec::kind_from_name(const std::string& name) {
    if (name == "standard_gaussian") return Kind::Gaussian;
    if (name == "standardized_student_t") return Kind::StudentT;
    if (name == "rademacher_product") return Kind::Rademacher;
    throw ContractError("unknown innovation kind: " + name);
}

}  // namespace qmle

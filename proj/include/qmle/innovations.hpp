#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qmle/rng.hpp"

namespace qmle {

// Innovation distribution: i.i.d. vectors with mutually uncorrelated,
// unit-variance, symmetric components. Moment functionals are closed-form
// where available and Monte Carlo (fixed draw count and seed) otherwise.
struct InnovationSpec {
    enum class Kind { Gaussian, StudentT, Rademacher };

    Kind kind = Kind::Gaussian;
    double nu = 0.0;  // Student-t degrees of freedom (standardized to unit variance)
    std::uint64_t mc_seed = 0x5EEDBA5EULL;
    long mc_draws = 1'000'000;

    static InnovationSpec gaussian() { return {}; }
    static InnovationSpec student_t(double nu);
    static InnovationSpec rademacher() { return {Kind::Rademacher, 0.0}; }

    /// E|xi^(k)|^r for one component.
    double abs_moment(double r) const;

    /// (E ||xi_0||^r)^(1/r) for a p-dimensional innovation.
    double norm_moment(int p, double r) const;

    /// Component fourth moment E[(xi^(k))^4].
    double m4() const;

    /// One innovation vector; consumes draws from `rng` sequentially.
    void draw(Rng& rng, int p, Eigen::VectorXd& out) const;

    std::string kind_name() const;
    static Kind kind_from_name(const std::string& name);
};

}  // namespace qmle

#pragma once

#include <cstdint>

#include "qmle/likelihood.hpp"

namespace qmle {

struct FitOptions {
    enum class Algo { Auto, BfgsProjected, NelderMead };
    Algo algo = Algo::Auto;  // Auto: BFGS with analytic score, else Nelder-Mead
    int starts = 5;          // initial guess, box center, then random in-box
    std::uint64_t seed = 0xA11CEULL;
    long max_iter = 500;
    double grad_tol_scale = 1e-6;  // tolerance 1e-6 * (1 + |L_n|/n)
    double step_tol = 1e-8;
    LikOptions lik;
};

struct FitResult {
    ParamVector theta_hat;
    double objective = 0.0;  // L_n at theta_hat
    long iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;  // projected gradient of L_n/n (0 for Nelder-Mead)
    int best_start = -1;
    int failed_starts = 0;  // starts where every evaluation errored
};

/// Maximizes the quasi-likelihood over the box; multi-start, deterministic
/// given the seed; evaluation errors are treated as rejected points. Throws
/// UnfittableError when every start fails outright.
FitResult fit(const Model& model, const Series& data, const ParamVector& box,
              const FitOptions& opts = {});

}  // namespace qmle

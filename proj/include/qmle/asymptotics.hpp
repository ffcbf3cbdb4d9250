#pragma once

#include <string>
#include <vector>

#include "qmle/innovations.hpp"
#include "qmle/likelihood.hpp"

namespace qmle {

enum class FMethod { HessianAvg, FormulaF0 };
enum class GMethod { ScoreOuter, FormulaG0 };

struct SandwichCov {
    MatrixXd F;
    MatrixXd G;
    MatrixXd sigma;  // F^{-1} G F^{-1}
    FMethod f_method = FMethod::HessianAvg;
    GMethod g_method = GMethod::ScoreOuter;
    long n = 0;
};

/// (1/n) sum_t d^2 q_t (hessian_avg) or the explicit information formula
/// 2 df_j' H^{-1} df_i + tr(H^{-2} dH_j dH_i) averaged over t (formula_F0).
/// Throws VarViolationError when the result is singular (condition > 1e12).
MatrixXd estimate_F(const Model& model, const VectorXd& theta, const Series& data,
                    FMethod method, const LikOptions& opts = {});

/// (1/n) sum_t dq_t dq_t' (score_outer) or the explicit three-term formula
/// with the innovation fourth moment m4 (formula_G0).
MatrixXd estimate_G(const Model& model, const VectorXd& theta, const Series& data,
                    GMethod method, double m4 = 3.0, const LikOptions& opts = {});

/// Component fourth moment estimated from standardized residuals
/// xi_t = M^{-1}(X_t - f_t):  m4 = mean((xi' xi)^2) / p - (p - 1).
double estimate_m4(const Model& model, const VectorXd& theta, const Series& data,
                   const LikOptions& opts = {});

/// sigma = F^{-1} G F^{-1} via linear solves.
SandwichCov sandwich(const MatrixXd& F, const MatrixXd& G, long n);

struct Interval {
    double lo, hi;
};

/// theta_i +- z_level sqrt(sigma_ii / n).
std::vector<Interval> confidence_intervals(const VectorXd& theta, const SandwichCov& cov,
                                           double level);

std::string f_method_name(FMethod m);
std::string g_method_name(GMethod m);

}  // namespace qmle

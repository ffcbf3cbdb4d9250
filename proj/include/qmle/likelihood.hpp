#pragma once

#include "qmle/model.hpp"

namespace qmle {

struct LikOptions {
    const std::vector<VectorXd>* u = nullptr;  // initial sequence (zero if null)
    long max_lags = -1;                        // -1: model's suggested truncation
    double det_floor = 1e-10;                  // A2 check on det H
};

/// Everything the per-path Gaussian quasi-likelihood scan can produce in one
/// pass, up to the requested derivative order.
struct LikSummary {
    long n = 0;
    double loglik = 0.0;     // L_n(theta) = -1/2 sum q_t
    VectorXd score;          // dL_n/dtheta            (order >= 1)
    MatrixXd hessian_avg;    // (1/n) sum d^2 q_t      (order >= 2)
    MatrixXd score_outer;    // (1/n) sum dq_t dq_t'   (order >= 1)
};

/// One scan over the data accumulating the quasi-likelihood and, if
/// requested, the analytic score, the averaged per-observation Hessian and
/// the score outer-product average.
LikSummary evaluate_likelihood(const Model& model, const VectorXd& theta, const Series& data,
                               int order, const LikOptions& opts = {});

/// L_n(theta) with truncated-history plug-ins (zero initial sequence by
/// default).
double quasi_loglik(const Model& model, const VectorXd& theta, const Series& data,
                    const LikOptions& opts = {});

/// dL_n/dtheta.
VectorXd score(const Model& model, const VectorXd& theta, const Series& data,
               const LikOptions& opts = {});

/// d^2 q_t / dtheta dtheta' at a single (1-based) observation index.
MatrixXd hessian_qt(const Model& model, const VectorXd& theta, const Series& data, long t,
                    const LikOptions& opts = {});

/// The per-observation deviances q_t, t = 1..n.
VectorXd per_t_deviance(const Model& model, const VectorXd& theta, const Series& data,
                        const LikOptions& opts = {});

}  // namespace qmle

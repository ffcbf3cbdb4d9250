#include "qmle/likelihood.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

namespace qmle {

namespace {

// Streaming quasi-likelihood accumulator. Per observation, with residual
// r = X_t - f, v = H^{-1} r, A_k = H^{-1} dH_k, u_k = H^{-1} df_k:
//   q_t    = r' v + log det H
//   dq_k   = -2 df_k' v - v' dH_k v + tr(A_k)
//   d2q_ij = -2 d2f_ij' v + 2 v' dH_i H^{-1} dH_j v - v' d2H_ij v
//            + 2 df_i' A_j v + 2 df_j' A_i v + 2 df_i' u_j
//            - tr(A_j A_i) + tr(H^{-1} d2H_ij)
// (the symmetric-index form of the printed second-derivative expression;
// verified against finite differences).
class LikSink final : public PathSink {
public:
    LikSink(const Series& data, int m, int d, int order, double det_floor)
        : data_(data), m_(m), d_(d), order_(order), det_floor_(det_floor) {
        if (order_ >= 1) {
            sum_dq_ = VectorXd::Zero(d_);
            outer_ = MatrixXd::Zero(d_, d_);
        }
        if (order_ >= 2) sum_d2q_ = MatrixXd::Zero(d_, d_);
    }

    bool keep_per_t = false;
    bool keep_per_t_hessian = false;

    void emit(long t, const VectorXd& f_t, const MatrixXd& H_t, const MatrixXd* df,
              const std::vector<MatrixXd>* dH, const std::vector<VectorXd>* d2f,
              const std::vector<MatrixXd>* d2H) override {
        if (!H_t.allFinite() || (f_t.size() && !f_t.allFinite()))
            throw NumericError("quasi_loglik: non-finite f/H at t = " + std::to_string(t));
        MatrixXd Hs = 0.5 * (H_t + H_t.transpose());
        Eigen::LLT<MatrixXd> llt(Hs);
        double logdet = 0.0;
        if (llt.info() == Eigen::Success) {
            const auto& L = llt.matrixL();
            double det = 1.0;
            for (int i = 0; i < m_; ++i) {
                logdet += 2.0 * std::log(L(i, i));
                det *= L(i, i) * L(i, i);
            }
            if (det < det_floor_)
                throw A2ViolationError(
                    "quasi_loglik: det H below floor at t = " + std::to_string(t), t);
        } else {
            throw A2ViolationError(
                "quasi_loglik: H not positive definite at t = " + std::to_string(t), t);
        }

        const VectorXd r = data_.data.row(t - 1).transpose() - f_t;
        const VectorXd v = llt.solve(r);
        const double q = r.dot(v) + logdet;
        sum_q_ += q;
        if (keep_per_t) per_t_q.push_back(q);

        if (order_ >= 1) {
            VectorXd dq(d_);
            A_.resize(d_);
            w_.resize(d_);
            for (int k = 0; k < d_; ++k) {
                A_[k] = llt.solve((*dH)[k]);
                w_[k].noalias() = A_[k] * v;  // H^{-1} dH_k v
                dq[k] = -2.0 * df->col(k).dot(v) - v.dot((*dH)[k] * v) + A_[k].trace();
            }
            sum_dq_ += dq;
            outer_.noalias() += dq * dq.transpose();

            if (order_ >= 2) {
                MatrixXd d2q(d_, d_);
                for (int i = 0; i < d_; ++i) {
                    const VectorXd ui = llt.solve(VectorXd(df->col(i)));
                    for (int j = i; j < d_; ++j) {
                        const int s = sym_index(i, j, d_);
                        double val = -2.0 * (*d2f)[s].dot(v);
                        val += 2.0 * v.dot((*dH)[i] * w_[j]);
                        val -= v.dot((*d2H)[s] * v);
                        val += 2.0 * df->col(i).dot(w_[j]) + 2.0 * df->col(j).dot(w_[i]);
                        val += 2.0 * ui.dot(df->col(j));
                        val -= (A_[j] * A_[i]).trace();
                        val += llt.solve((*d2H)[s]).trace();
                        d2q(i, j) = d2q(j, i) = val;
                    }
                }
                sum_d2q_ += d2q;
                if (keep_per_t_hessian) per_t_hess.push_back(d2q);
            }
        }
        ++n_;
    }

    LikSummary summary() const {
        LikSummary s;
        s.n = n_;
        s.loglik = -0.5 * sum_q_;
        if (order_ >= 1) {
            s.score = -0.5 * sum_dq_;
            s.score_outer = outer_ / static_cast<double>(n_);
        }
        if (order_ >= 2) s.hessian_avg = sum_d2q_ / static_cast<double>(n_);
        return s;
    }

    std::vector<double> per_t_q;
    std::vector<MatrixXd> per_t_hess;

private:
    const Series& data_;
    int m_, d_, order_;
    double det_floor_;
    long n_ = 0;
    double sum_q_ = 0.0;
    VectorXd sum_dq_;
    MatrixXd outer_;
    MatrixXd sum_d2q_;
    std::vector<MatrixXd> A_;
    std::vector<VectorXd> w_;
};

LikSink run_scan(const Model& model, const VectorXd& theta, const Series& data, int order,
                 const LikOptions& opts, bool keep_per_t, bool keep_hess) {
    if (data.n() < 1) throw ContractError("quasi_loglik: empty series");
    if (data.m() != model.obs_dim()) throw ContractError("quasi_loglik: series dimension != m");
    if (theta.size() != model.param_dim()) throw ContractError("quasi_loglik: theta dimension");
    LikSink sink(data, model.obs_dim(), model.param_dim(), order, opts.det_floor);
    sink.keep_per_t = keep_per_t;
    sink.keep_per_t_hessian = keep_hess;
    EvalOptions eopts;
    eopts.max_lags = opts.max_lags;
    eopts.u = opts.u;
    eopts.det_floor = opts.det_floor;
    model.scan_path(theta, data, eopts, order, sink);
    return sink;
}

}  // namespace

LikSummary evaluate_likelihood(const Model& model, const VectorXd& theta, const Series& data,
                               int order, const LikOptions& opts) {
    return run_scan(model, theta, data, order, opts, false, false).summary();
}

double quasi_loglik(const Model& model, const VectorXd& theta, const Series& data,
                    const LikOptions& opts) {
    return evaluate_likelihood(model, theta, data, 0, opts).loglik;
}

VectorXd score(const Model& model, const VectorXd& theta, const Series& data,
               const LikOptions& opts) {
    return evaluate_likelihood(model, theta, data, 1, opts).score;
}

MatrixXd hessian_qt(const Model& model, const VectorXd& theta, const Series& data, long t,
                    const LikOptions& opts) {
    if (t < 1 || t > data.n()) throw ContractError("hessian_qt: t out of range");
    auto sink = run_scan(model, theta, data, 2, opts, false, true);
    return sink.per_t_hess[t - 1];
}

VectorXd per_t_deviance(const Model& model, const VectorXd& theta, const Series& data,
                        const LikOptions& opts) {
    auto sink = run_scan(model, theta, data, 0, opts, true, false);
    return Eigen::Map<const VectorXd>(sink.per_t_q.data(),
                                      static_cast<long>(sink.per_t_q.size()));
}

}  // namespace qmle

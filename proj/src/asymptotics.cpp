#include "qmle/asymptotics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "qmle/rng.hpp"

namespace qmle {

namespace {

void check_dims(const Model& model, const VectorXd& theta, const Series& data) {
    if (data.n() < 1) throw ContractError("asymptotics: empty series");
    if (data.m() != model.obs_dim()) throw ContractError("asymptotics: series dimension != m");
    if (theta.size() != model.param_dim()) throw ContractError("asymptotics: theta dimension");
}

void check_conditioning(const MatrixXd& F, const char* what) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(F);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw VarViolationError(std::string(what) +
                                ": information matrix singular or near-singular");
}

// Accumulates the explicit F0 / G0 formulas from a first-order scan.
class FormulaSink final : public PathSink {
public:
    FormulaSink(int m, int d, bool want_G, double pm4_factor)
        : m_(m), d_(d), want_G_(want_G), pm4_factor_(pm4_factor) {
        acc_ = MatrixXd::Zero(d, d);
    }

    void emit(long t, const VectorXd&, const MatrixXd& H_t, const MatrixXd* df,
              const std::vector<MatrixXd>* dH, const std::vector<VectorXd>*,
              const std::vector<MatrixXd>*) override {
        Eigen::LLT<MatrixXd> llt(MatrixXd(0.5 * (H_t + H_t.transpose())));
        if (llt.info() != Eigen::Success)
            throw A2ViolationError("asymptotics: H not positive definite at t = " +
                                   std::to_string(t));
        std::vector<MatrixXd> A(d_);  // H^{-1} dH_k
        MatrixXd u(m_, d_);           // H^{-1} df_k
        VectorXd trA(d_);
        for (int k = 0; k < d_; ++k) {
            A[k] = llt.solve((*dH)[k]);
            u.col(k) = llt.solve(VectorXd(df->col(k)));
            trA[k] = A[k].trace();
        }
        for (int i = 0; i < d_; ++i)
            for (int j = i; j < d_; ++j) {
                // tr(H^{-2} dH_j dH_i) = tr(A_j' A_i') via H^{-1} symmetry:
                // A_j A_i = H^{-1} dH_j H^{-1} dH_i has the same trace.
                const double tr2 = (A[j] * A[i]).trace();
                const double ff = df->col(j).dot(u.col(i));
                double val;
                if (!want_G_) {
                    val = 2.0 * ff + tr2;
                } else {
                    val = 4.0 * ff - trA[i] * trA[j] + pm4_factor_ * tr2;
                }
                acc_(i, j) += val;
                if (j != i) acc_(j, i) += val;
            }
        ++n_;
    }

    MatrixXd average() const { return acc_ / static_cast<double>(n_); }

private:
    int m_, d_;
    bool want_G_;
    double pm4_factor_;
    MatrixXd acc_;
    long n_ = 0;
};

// Accumulates mean((xi' xi)^2) over standardized residuals.
class ResidualSink final : public PathSink {
public:
    ResidualSink(const Series& data, int m) : data_(data), m_(m) {}

    void emit(long t, const VectorXd& f_t, const MatrixXd& H_t, const MatrixXd*,
              const std::vector<MatrixXd>*, const std::vector<VectorXd>*,
              const std::vector<MatrixXd>*) override {
        Eigen::LLT<MatrixXd> llt(MatrixXd(0.5 * (H_t + H_t.transpose())));
        if (llt.info() != Eigen::Success)
            throw A2ViolationError("estimate_m4: H not positive definite at t = " +
                                   std::to_string(t));
        const VectorXd r = data_.data.row(t - 1).transpose() - f_t;
        // xi = L^{-1} r where H = L L'.
        const VectorXd xi = llt.matrixL().solve(r);
        const double s = xi.squaredNorm();
        acc_ += s * s;
        ++n_;
    }

    double mean() const { return acc_ / static_cast<double>(n_); }

private:
    const Series& data_;
    int m_;
    double acc_ = 0.0;
    long n_ = 0;
};

EvalOptions to_eval(const LikOptions& opts) {
    EvalOptions e;
    e.max_lags = opts.max_lags;
    e.u = opts.u;
    e.det_floor = opts.det_floor;
    return e;
}

}  // namespace

MatrixXd estimate_F(const Model& model, const VectorXd& theta, const Series& data,
                    FMethod method, const LikOptions& opts) {
    check_dims(model, theta, data);
    MatrixXd F;
    if (method == FMethod::HessianAvg) {
        const LikSummary s = evaluate_likelihood(model, theta, data, 2, opts);
        F = 0.5 * (s.hessian_avg + s.hessian_avg.transpose());
    } else {
        FormulaSink sink(model.obs_dim(), model.param_dim(), /*want_G=*/false, 0.0);
        model.scan_path(theta, data, to_eval(opts), 1, sink);
        F = sink.average();
    }
    check_conditioning(F, "estimate_F");
    return F;
}

MatrixXd estimate_G(const Model& model, const VectorXd& theta, const Series& data,
                    GMethod method, double m4, const LikOptions& opts) {
    check_dims(model, theta, data);
    if (method == GMethod::ScoreOuter) {
        const LikSummary s = evaluate_likelihood(model, theta, data, 1, opts);
        return 0.5 * (s.score_outer + s.score_outer.transpose());
    }
    const int p = model.innov_dim();
    const double factor = p * (m4 + (p - 1));
    FormulaSink sink(model.obs_dim(), model.param_dim(), /*want_G=*/true, factor);
    model.scan_path(theta, data, to_eval(opts), 1, sink);
    return sink.average();
}

double estimate_m4(const Model& model, const VectorXd& theta, const Series& data,
                   const LikOptions& opts) {
    check_dims(model, theta, data);
    ResidualSink sink(data, model.obs_dim());
    model.scan_path(theta, data, to_eval(opts), 0, sink);
    const int p = model.innov_dim();
    return sink.mean() / p - (p - 1);
}

SandwichCov sandwich(const MatrixXd& F, const MatrixXd& G, long n) {
    if (F.rows() != F.cols() || G.rows() != G.cols() || F.rows() != G.rows())
        throw ContractError("sandwich: dimension mismatch");
    check_conditioning(F, "sandwich");
    SandwichCov out;
    out.F = F;
    out.G = G;
    out.n = n;
    Eigen::LDLT<MatrixXd> ldlt(0.5 * (F + F.transpose()));
    const MatrixXd X = ldlt.solve(G);                       // F^{-1} G
    const MatrixXd S = ldlt.solve(X.transpose()).transpose();  // F^{-1} G F^{-1}
    out.sigma = 0.5 * (S + S.transpose());
    return out;
}

std::vector<Interval> confidence_intervals(const VectorXd& theta, const SandwichCov& cov,
                                           double level) {
    if (!(level > 0.0 && level < 1.0))
        throw ContractError("confidence_intervals: level must be in (0, 1)");
    if (cov.n < 1) throw ContractError("confidence_intervals: n must be set");
    if (theta.size() != cov.sigma.rows())
        throw ContractError("confidence_intervals: dimension mismatch");
    const double z = Rng::normal_quantile(0.5 * (1.0 + level));
    std::vector<Interval> out;
    out.reserve(theta.size());
    for (int i = 0; i < theta.size(); ++i) {
        const double half = z * std::sqrt(std::max(cov.sigma(i, i), 0.0) /
                                          static_cast<double>(cov.n));
        out.push_back({theta[i] - half, theta[i] + half});
    }
    return out;
}

std::string f_method_name(FMethod m) {
    return m == FMethod::HessianAvg ? "hessian_avg" : "formula_F0";
}
std::string g_method_name(GMethod m) {
    return m == GMethod::ScoreOuter ? "score_outer" : "formula_G0";
}

}  // namespace qmle

#pragma once

#include <memory>

#include "qmle/model.hpp"
#include "qmle/zoo/coeffs.hpp"
#include "qmle/zoo/expansions.hpp"

namespace qmle {

/// A zoo constructor's output: the immutable model plus the packed parameter
/// point corresponding to the coefficient record it was built from, inside a
/// usable default box.
struct BuiltModel {
    std::shared_ptr<const Model> model;
    ParamVector theta;
};

// --- univariate volatility families -----------------------------------------

/// ARCH(inf): X_t = sigma_t xi_t, sigma_t^2 = b0 + sum_j b_j X_{t-j}^2.
/// Two parameterizations: explicit lags theta = (b0, b_1..b_K), or the
/// power-law scheme b_j = scale * j^(-ell) with theta = (b0, scale) and the
/// exponent ell structural.
class ArchInfModel final : public Model {
public:
    explicit ArchInfModel(int K);
    ArchInfModel(double ell, long max_lag);  // power-law scheme

    std::string family() const override { return "arch_inf"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    bool power_law() const { return power_law_; }
    double ell() const { return ell_; }
    long lag_count() const { return K_; }
    double coeff(const VectorXd& theta, long j) const;  // b_j(theta)

private:
    bool power_law_ = false;
    double ell_ = 0.0;
    long K_ = 0;  // explicit lag count, or power-law evaluation cutoff
};

/// GARCH(q,q'): sigma_t^2 = c0 + sum c_i X_{t-i}^2 + sum d_k sigma_{t-k}^2,
/// theta = (c0, c_1..c_q, d_1..d_q'). Evaluates on arbitrary histories via
/// the expanded ARCH(inf) coefficients; path scans use the native recursion.
class GarchModel final : public Model {
public:
    GarchModel(int q, int qp);

    std::string family() const override { return "garch"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;
    double alpha_sum(Psi psi, int order, const VectorXd& theta) const override;
    void scan_path(const VectorXd& theta, const Series& data, const EvalOptions& opts,
                   int order, PathSink& sink) const override;

    int q() const { return q_; }
    int qp() const { return qp_; }
    GarchCoeffs unpack(const VectorXd& theta) const;

private:
    int q_, qp_;
};

/// TARCH(K): X_t = sigma_t xi_t with
/// sigma_t = b0 + sum_j [b_j^+ max(X_{t-j},0) - b_j^- min(X_{t-j},0)],
/// theta = (b0, b_1^+..b_K^+, b_1^-..b_K^-).
class TarchModel final : public Model {
public:
    explicit TarchModel(int K);

    std::string family() const override { return "tarch"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool supplies_M() const override { return true; }
    void M(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    int lag_count() const { return K_; }

private:
    double sigma(const VectorXd& theta, const History& h) const;
    int K_;
};

// --- multivariate volatility families ----------------------------------------

/// Multivariate ARCH(K): H_t = L0 L0' + sum_j B_j X_{t-j} X_{t-j}' B_j',
/// theta = (lower triangle of L0 column-major, vec(B_1), .., vec(B_K)).
class MvArchModel final : public Model {
public:
    MvArchModel(int m, int K);

    std::string family() const override { return "mvarch"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    int lag_count() const { return K_; }
    MatrixXd unpack_L0(const VectorXd& theta) const;
    MatrixXd unpack_B(const VectorXd& theta, long j) const;

private:
    int K_;
};

/// BEKK(q,q'): H_t = C0 C0' + sum_i C_i X X' C_i' + sum_k D_k H_{t-k} D_k',
/// evaluated through its multivariate ARCH(inf) expansion in the starred
/// (Kronecker-square) operators. theta = (lower triangle of C0 column-major,
/// vec(C_1), .., vec(C_q), vec(D_1), .., vec(D_q')).
class BekkModel final : public Model {
public:
    BekkModel(int m, int q, int qp);

    std::string family() const override { return "bekk"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;
    long suggested_lag_truncation(const VectorXd& theta) const override;

    int q() const { return q_; }
    int qp() const { return qp_; }
    BekkCoeffs unpack(const VectorXd& theta) const;

private:
    int q_, qp_;
};

/// NLARCH(K) with diagonal volatility: X_t = diag(v_t) xi_t,
/// v_t = B0 + sum_j [B_j^+ max(X_{t-j},0) - B_j^- min(X_{t-j},0)]
/// (componentwise max/min). theta = (B0, then vec(B_1^+), vec(B_1^-), ..).
class NlarchModel final : public Model {
public:
    NlarchModel(int m, int K);

    std::string family() const override { return "nlarch"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool supplies_M() const override { return true; }
    void M(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    int lag_count() const { return K_; }

private:
    VectorXd vol(const VectorXd& theta, const History& h) const;
    int K_;
};

// --- mean-process families ---------------------------------------------------

/// Nonlinear AR(K) with linear lag maps and M = I:
/// X_t = a0 + sum_j A_j X_{t-j} + xi_t; theta = (a0, vec(A_1), .., vec(A_K)).
class NlarModel final : public Model {
public:
    NlarModel(int m, int K);

    std::string family() const override { return "nlar"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void f(const Ctx&, const History&, VectorXd& out) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    bool supplies_M() const override { return true; }
    void M(const Ctx&, const History&, MatrixXd& out) const override;
    bool analytic_derivatives() const override { return true; }
    void f_grad(const Ctx&, const History&, MatrixXd& out) const override;
    void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    void f_hess(const Ctx&, const History&, std::vector<VectorXd>& out) const override;
    void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    int lag_count() const { return K_; }

private:
    int K_;
};

/// ARMA(s,s')-GARCH(q,q') with diagonal conditional variance:
/// f_t = -sum Gamma_i X_{t-i} (Gamma(L) = Psi(L)^{-1} Phi(L) = I + sum
/// Gamma_i L^i), residuals eps_t = X_t - f_t, component variances
/// h_t = b0 + sum B_i eps_{t-i}^2 from the expanded variance recursion,
/// H_t = diag(h_t). Nonlinear in theta, so derivatives fall back to finite
/// differences. theta = (vec(Phi_1..s), vec(Psi_1..s'), c0, vec(C_1..q),
/// vec(D_1..q')).
class ArmaGarchModel final : public Model {
public:
    ArmaGarchModel(int m, int s, int sp, int q, int qp);

    std::string family() const override { return "arma_garch"; }
    std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order) const override;
    void f(const Ctx&, const History&, VectorXd& out) const override;
    void H(const Ctx&, const History&, MatrixXd& out) const override;
    double alpha(Psi psi, int order, const VectorXd& theta, long j) const override;
    DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const override;

    int s() const { return s_; }
    int sp() const { return sp_; }
    int q() const { return q_; }
    int qp() const { return qp_; }
    ArmaGarchCoeffs unpack(const VectorXd& theta) const;

private:
    int s_, sp_, q_, qp_;
};

// --- constructors ------------------------------------------------------------
// Each validates the coefficient invariants (naming the violated condition)
// and returns the model with theta packed from the record, inside a default
// box that respects the family's positivity constraints.

BuiltModel make_arch_inf(const ArchInfCoeffs& c);
BuiltModel make_garch(const GarchCoeffs& c);
BuiltModel make_tarch(const TarchCoeffs& c);
BuiltModel make_mvarch(const MvArchCoeffs& c);
BuiltModel make_bekk(const BekkCoeffs& c);
BuiltModel make_nlarch(const NlarchCoeffs& c);
BuiltModel make_nlar(const NlarCoeffs& c);
BuiltModel make_arma_garch(const ArmaGarchCoeffs& c);

}  // namespace qmle

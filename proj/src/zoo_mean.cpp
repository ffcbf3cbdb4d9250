#include <Eigen/SVD>
#include <cmath>

#include "qmle/zoo/zoo.hpp"

namespace qmle {

namespace {

double spectral_norm(const MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::JacobiSVD<MatrixXd>(A).singularValues()[0];
}

MatrixXd unvec(const VectorXd& v, int m) {
    MatrixXd A(m, m);
    int k = 0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) A(i, j) = v[k++];
    return A;
}

VectorXd vec_of(const MatrixXd& A) {
    VectorXd v(A.size());
    int k = 0;
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) v[k++] = A(i, j);
    return v;
}

}  // namespace

// --- NlarModel ----------------------------------------------------------------

namespace {

struct NlarCtx final : Model::Ctx {
    VectorXd a0;
    std::vector<MatrixXd> A;
};

}  // namespace

NlarModel::NlarModel(int m, int K)
    : Model(m, m, m + K * m * m, Route::M, /*zero_mean=*/false), K_(K) {
    if (m < 1 || K < 0) throw ContractError("nlar: need m >= 1, K >= 0");
}

std::unique_ptr<const Model::Ctx> NlarModel::make_ctx(const VectorXd& theta, int) const {
    if (theta.size() != d_) throw ContractError("nlar: theta dimension");
    auto ctx = std::make_unique<NlarCtx>();
    ctx->theta = theta;
    ctx->a0 = theta.head(m_);
    ctx->A.reserve(K_);
    for (int j = 0; j < K_; ++j)
        ctx->A.push_back(unvec(theta.segment(m_ + j * m_ * m_, m_ * m_), m_));
    return ctx;
}

void NlarModel::f(const Ctx& base, const History& h, VectorXd& out) const {
    const auto& ctx = static_cast<const NlarCtx&>(base);
    out = ctx.a0;
    const long top = std::min<long>(K_, h.effective_length());
    for (long j = 1; j <= top; ++j) out.noalias() += ctx.A[j - 1] * h.vec(j);
}

void NlarModel::M(const Ctx&, const History&, MatrixXd& out) const {
    out = MatrixXd::Identity(m_, m_);
}

void NlarModel::H(const Ctx&, const History&, MatrixXd& out) const {
    out = MatrixXd::Identity(m_, m_);
}

void NlarModel::f_grad(const Ctx&, const History& h, MatrixXd& out) const {
    out = MatrixXd::Zero(m_, d_);
    out.leftCols(m_).setIdentity();
    const long top = std::min<long>(K_, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        const int off = m_ + static_cast<int>(j - 1) * m_ * m_;
        for (int b = 0; b < m_; ++b)
            for (int a = 0; a < m_; ++a) out(a, off + b * m_ + a) = x[b];
    }
}

void NlarModel::f_hess(const Ctx&, const History&, std::vector<VectorXd>& out) const {
    out.assign(sym_size(d_), VectorXd::Zero(m_));
}

void NlarModel::H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const {
    out.assign(d_, MatrixXd::Zero(m_, m_));
}

void NlarModel::H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const {
    out.assign(sym_size(d_), MatrixXd::Zero(m_, m_));
}

double NlarModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::F || j < 1 || j > K_ || order > 1) return 0.0;
    if (order == 1) return 1.0;
    return spectral_norm(unvec(theta.segment(m_ + (j - 1) * m_ * m_, m_ * m_), m_));
}

DecayTag NlarModel::alpha_decay(Psi psi, int order, const VectorXd&) const {
    if (psi != Psi::F || order > 1) return DecayTag::finite(0);
    return DecayTag::finite(K_);
}

BuiltModel make_nlar(const NlarCoeffs& c) {
    const int m = static_cast<int>(c.a0.size());
    if (m < 1) throw ContractError("make_nlar: a0 must be nonempty");
    const int K = static_cast<int>(c.A.size());
    for (const auto& A : c.A)
        if (A.rows() != m || A.cols() != m) throw ContractError("make_nlar: A_j must be m x m");
    const int d = m + K * m * m;
    VectorXd theta(d), lo(d), hi(d);
    theta.head(m) = c.a0;
    for (int j = 0; j < K; ++j) theta.segment(m + j * m * m, m * m) = vec_of(c.A[j]);
    for (int g = 0; g < d; ++g) {
        const double r = std::max(0.5, std::fabs(theta[g]));
        lo[g] = theta[g] - r;
        hi[g] = theta[g] + r;
    }
    BuiltModel out;
    out.model = std::make_shared<NlarModel>(m, K);
    out.theta = ParamVector(theta, lo, hi);
    return out;
}

// --- ArmaGarchModel -------------------------------------------------------------

namespace {

struct ArmaGarchCtx final : Model::Ctx {
    long Jf = 0, Jv = 0;
    std::vector<MatrixXd> Gamma;  // AR(inf) matrices
    VectorXd b0;                  // expanded variance intercept
    std::vector<MatrixXd> B;      // expanded variance lag matrices
};

}  // namespace

ArmaGarchModel::ArmaGarchModel(int m, int s, int sp, int q, int qp)
    : Model(m, m, (s + sp + q + qp) * m * m + m, Route::M, /*zero_mean=*/false),
      s_(s),
      sp_(sp),
      q_(q),
      qp_(qp) {
    if (m < 1 || s < 0 || sp < 0 || q < 0 || qp < 0)
        throw ContractError("arma_garch: orders must be >= 0");
}

ArmaGarchCoeffs ArmaGarchModel::unpack(const VectorXd& theta) const {
    if (theta.size() != d_) throw ContractError("arma_garch: theta dimension");
    const int m2 = m_ * m_;
    ArmaGarchCoeffs a;
    int off = 0;
    for (int i = 0; i < s_; ++i, off += m2) a.Phi.push_back(unvec(theta.segment(off, m2), m_));
    for (int i = 0; i < sp_; ++i, off += m2) a.Psi.push_back(unvec(theta.segment(off, m2), m_));
    a.c0 = theta.segment(off, m_);
    off += m_;
    for (int i = 0; i < q_; ++i, off += m2) a.C.push_back(unvec(theta.segment(off, m2), m_));
    for (int i = 0; i < qp_; ++i, off += m2) a.D.push_back(unvec(theta.segment(off, m2), m_));
    return a;
}

namespace {

// Truncation horizon where a geometrically-decaying matrix sequence drops
// below tol in spectral norm, with a floor at the finite part.
long horizon(const std::vector<MatrixXd>& seq, long finite_part) {
    long J = finite_part;
    for (long j = static_cast<long>(seq.size()); j >= 1; --j) {
        if (spectral_norm(seq[j - 1]) > 1e-12) {
            J = std::max(J, j);
            break;
        }
    }
    return std::max<long>(J, 1);
}

}  // namespace

std::unique_ptr<const Model::Ctx> ArmaGarchModel::make_ctx(const VectorXd& theta, int) const {
    const ArmaGarchCoeffs a = unpack(theta);
    if (sp_ > 0 && companion_spectral_radius(a.Psi, m_) >= 1.0)
        throw DivergenceError("arma_garch: Psi(L) not invertible");
    if (qp_ > 0 && companion_spectral_radius(a.D, m_) >= 1.0)
        throw DivergenceError("arma_garch: variance feedback spectral radius >= 1");

    auto ctx = std::make_unique<ArmaGarchCtx>();
    ctx->theta = theta;
    const long probe = 2048;
    std::vector<MatrixXd> gamma = arma_to_ar_coeffs(a.Phi, a.Psi, m_, probe);
    DiagVarExpansion var = diag_var_expand(a.c0, a.C, a.D, probe);
    ctx->Jf = horizon(gamma, s_);
    ctx->Jv = horizon(var.B, q_);
    gamma.resize(ctx->Jf);
    var.B.resize(ctx->Jv);
    ctx->Gamma = std::move(gamma);
    ctx->b0 = std::move(var.b0);
    ctx->B = std::move(var.B);
    return ctx;
}

void ArmaGarchModel::f(const Ctx& base, const History& h, VectorXd& out) const {
    const auto& ctx = static_cast<const ArmaGarchCtx&>(base);
    out = VectorXd::Zero(m_);
    const long top = std::min(ctx.Jf, h.effective_length());
    for (long k = 1; k <= top; ++k) out.noalias() -= ctx.Gamma[k - 1] * h.vec(k);
}

void ArmaGarchModel::H(const Ctx& base, const History& h, MatrixXd& out) const {
    const auto& ctx = static_cast<const ArmaGarchCtx&>(base);
    VectorXd hv = ctx.b0;
    const long avail = h.effective_length();
    const long topi = std::min(ctx.Jv, avail);
    for (long i = 1; i <= topi; ++i) {
        // Residual at lag i: eps_{t-i} = x_i + sum_k Gamma_k x_{i+k}.
        VectorXd eps = h.vec(i);
        const long topk = std::min(ctx.Jf, avail - i);
        for (long k = 1; k <= topk; ++k) eps.noalias() += ctx.Gamma[k - 1] * h.vec(i + k);
        hv.noalias() += ctx.B[i - 1] * eps.cwiseProduct(eps);
    }
    out = hv.asDiagonal();
}

namespace {

// Lag-j matrix of the declared Lipschitz family for ARMA-GARCH.
MatrixXd arma_lag_matrix(const ArmaGarchModel& model, Psi psi, const VectorXd& theta, long j) {
    const ArmaGarchCoeffs a = model.unpack(theta);
    const int m = model.obs_dim();
    if (psi == Psi::F) {
        auto g = arma_to_ar_coeffs(a.Phi, a.Psi, m, j);
        return g[j - 1];
    }
    auto v = diag_var_expand(a.c0, a.C, a.D, j);
    return v.B[j - 1];
}

}  // namespace

double ArmaGarchModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if ((psi != Psi::F && psi != Psi::M) || j < 1 || order > 2) return 0.0;
    if (order == 0) return spectral_norm(arma_lag_matrix(*this, psi, theta, j));
    // Derivative sequences evaluated by central differences on the expanded
    // lag matrix (the expansion is nonlinear in theta).
    double best = 0.0;
    for (int g = 0; g < d_; ++g) {
        const double step = std::max(1e-5, 1e-5 * std::fabs(theta[g]));
        VectorXd tp = theta, tm = theta;
        tp[g] += step;
        tm[g] -= step;
        const MatrixXd Mp = arma_lag_matrix(*this, psi, tp, j);
        const MatrixXd Mm = arma_lag_matrix(*this, psi, tm, j);
        if (order == 1) {
            best = std::max(best, spectral_norm((Mp - Mm) / (2.0 * step)));
        } else {
            const MatrixXd M0 = arma_lag_matrix(*this, psi, theta, j);
            best = std::max(best, spectral_norm((Mp - 2.0 * M0 + Mm) / (step * step)));
        }
    }
    return best;
}

DecayTag ArmaGarchModel::alpha_decay(Psi psi, int, const VectorXd& theta) const {
    const ArmaGarchCoeffs a = unpack(theta);
    if (psi == Psi::F) {
        if (sp_ == 0) return DecayTag::finite(s_);
        const double rho = companion_spectral_radius(a.Psi, m_);
        return (rho > 0) ? DecayTag::geometric(std::min(rho + 1e-9, 0.999999))
                         : DecayTag::finite(s_);
    }
    if (psi == Psi::M) {
        if (qp_ == 0) return DecayTag::finite(q_);
        const double rho = companion_spectral_radius(a.D, m_);
        return (rho > 0) ? DecayTag::geometric(std::min(rho + 1e-9, 0.999999))
                         : DecayTag::finite(q_);
    }
    return DecayTag::finite(0);
}

BuiltModel make_arma_garch(const ArmaGarchCoeffs& c) {
    const int m = static_cast<int>(c.c0.size());
    if (m < 1) throw ContractError("make_arma_garch: c0 must be nonempty");
    for (int i = 0; i < m; ++i)
        if (!(c.c0[i] > 0.0))
            throw ContractError("make_arma_garch: c0 components must be > 0");
    auto check_dims = [m](const std::vector<MatrixXd>& v, const char* what) {
        for (const auto& M : v)
            if (M.rows() != m || M.cols() != m)
                throw ContractError(std::string("make_arma_garch: ") + what + " must be m x m");
    };
    check_dims(c.Phi, "Phi_i");
    check_dims(c.Psi, "Psi_i");
    check_dims(c.C, "C_i");
    check_dims(c.D, "D_i");
    for (const auto& M : c.C)
        if ((M.array() < 0.0).any())
            throw ContractError("make_arma_garch: C_i entries must be >= 0");
    for (const auto& M : c.D)
        if ((M.array() < 0.0).any())
            throw ContractError("make_arma_garch: D_i entries must be >= 0");
    if (!c.Psi.empty() && companion_spectral_radius(c.Psi, m) >= 1.0)
        throw ContractError("make_arma_garch: Psi(L) must be invertible (spectral radius < 1)");
    if (!c.D.empty() && companion_spectral_radius(c.D, m) >= 1.0)
        throw DivergenceError("make_arma_garch: variance feedback spectral radius >= 1");

    const int m2 = m * m;
    const int s = static_cast<int>(c.Phi.size());
    const int sp = static_cast<int>(c.Psi.size());
    const int q = static_cast<int>(c.C.size());
    const int qp = static_cast<int>(c.D.size());
    const int d = (s + sp + q + qp) * m2 + m;
    VectorXd theta(d), lo(d), hi(d);
    int off = 0;
    for (const auto& M : c.Phi) {
        theta.segment(off, m2) = vec_of(M);
        off += m2;
    }
    for (const auto& M : c.Psi) {
        theta.segment(off, m2) = vec_of(M);
        off += m2;
    }
    const int c0_off = off;
    theta.segment(off, m) = c.c0;
    off += m;
    for (const auto& M : c.C) {
        theta.segment(off, m2) = vec_of(M);
        off += m2;
    }
    for (const auto& M : c.D) {
        theta.segment(off, m2) = vec_of(M);
        off += m2;
    }
    for (int g = 0; g < d; ++g) {
        if (g >= c0_off && g < c0_off + m) {
            lo[g] = 1e-3;
            hi[g] = std::max(3.0 * theta[g], 1.0);
        } else if (g >= c0_off + m) {
            lo[g] = 0.0;
            hi[g] = std::max(2.0 * theta[g], 0.9);
        } else {
            const double r = std::max(0.4, std::fabs(theta[g]));
            lo[g] = theta[g] - r;
            hi[g] = theta[g] + r;
        }
    }
    BuiltModel out;
    out.model = std::make_shared<ArmaGarchModel>(m, s, sp, q, qp);
    out.theta = ParamVector(theta, lo, hi);
    return out;
}

}  // namespace qmle

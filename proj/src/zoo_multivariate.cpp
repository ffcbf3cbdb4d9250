#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

#include "qmle/zoo/zoo.hpp"

namespace qmle {

namespace {

constexpr double kDiagFloor = 0.05;

double spectral_norm(const MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::JacobiSVD<MatrixXd>(A).singularValues()[0];
}

MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
    MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

VectorXd vec_of(const MatrixXd& A) {
    VectorXd v(A.size());
    int k = 0;
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) v[k++] = A(i, j);
    return v;
}

MatrixXd unvec(const VectorXd& v, int m) {
    MatrixXd A(m, m);
    int k = 0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) A(i, j) = v[k++];
    return A;
}

// Lower-triangle (column-major) packing used for the constant factors.
int tri_size(int m) { return m * (m + 1) / 2; }

MatrixXd unpack_lower(const VectorXd& theta, int offset, int m) {
    MatrixXd L = MatrixXd::Zero(m, m);
    int k = offset;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i) L(i, j) = theta[k++];
    return L;
}

void pack_lower(const MatrixXd& L, VectorXd& theta, int offset) {
    int k = offset;
    for (int j = 0; j < L.cols(); ++j)
        for (int i = j; i < L.rows(); ++i) theta[k++] = L(i, j);
}

MatrixXd unpack_full(const VectorXd& theta, int offset, int m) {
    return unvec(theta.segment(offset, m * m), m);
}

}  // namespace

// --- MvArchModel ---------------------------------------------------------------

namespace {

struct MvArchCtx final : Model::Ctx {
    MatrixXd L0;
    std::vector<MatrixXd> B;
};

}  // namespace

MvArchModel::MvArchModel(int m, int K)
    : Model(m, m, tri_size(m) + K * m * m, Route::M, /*zero_mean=*/true), K_(K) {
    if (m < 1 || K < 0) throw ContractError("mvarch: need m >= 1, K >= 0");
}

MatrixXd MvArchModel::unpack_L0(const VectorXd& theta) const {
    return unpack_lower(theta, 0, m_);
}

MatrixXd MvArchModel::unpack_B(const VectorXd& theta, long j) const {
    return unpack_full(theta, tri_size(m_) + static_cast<int>(j - 1) * m_ * m_, m_);
}

std::unique_ptr<const Model::Ctx> MvArchModel::make_ctx(const VectorXd& theta, int) const {
    if (theta.size() != d_) throw ContractError("mvarch: theta dimension");
    auto ctx = std::make_unique<MvArchCtx>();
    ctx->theta = theta;
    ctx->L0 = unpack_L0(theta);
    ctx->B.reserve(K_);
    for (int j = 1; j <= K_; ++j) ctx->B.push_back(unpack_B(theta, j));
    return ctx;
}

void MvArchModel::H(const Ctx& base, const History& h, MatrixXd& out) const {
    const auto& ctx = static_cast<const MvArchCtx&>(base);
    out.noalias() = ctx.L0 * ctx.L0.transpose();
    const long top = std::min<long>(K_, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const VectorXd y = ctx.B[j - 1] * h.vec(j);
        out.noalias() += y * y.transpose();
    }
}

void MvArchModel::H_grad(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    const auto& ctx = static_cast<const MvArchCtx&>(base);
    out.assign(d_, MatrixXd::Zero(m_, m_));
    // Constant block: d(L0 L0')/dL0_{ij} = e_i (L0 col j)' + (L0 col j) e_i'.
    int g = 0;
    for (int j = 0; j < m_; ++j)
        for (int i = j; i < m_; ++i, ++g) {
            out[g].row(i) += ctx.L0.col(j).transpose();
            out[g].col(i) += ctx.L0.col(j);
        }
    const long top = std::min<long>(K_, h.effective_length());
    for (long lag = 1; lag <= top; ++lag) {
        const VectorXd x = h.vec(lag);
        const VectorXd y = ctx.B[lag - 1] * x;
        const int off = tri_size(m_) + static_cast<int>(lag - 1) * m_ * m_;
        for (int b = 0; b < m_; ++b)
            for (int a = 0; a < m_; ++a) {
                MatrixXd& dH = out[off + b * m_ + a];
                dH.row(a) += x[b] * y.transpose();
                dH.col(a) += x[b] * y;
            }
    }
}

void MvArchModel::H_hess(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    out.assign(sym_size(d_), MatrixXd::Zero(m_, m_));
    // Constant block pairs: d2H = delta_{jl} (e_i e_k' + e_k e_i').
    std::vector<std::pair<int, int>> lpos;  // theta coord -> (row, col) of L0
    for (int j = 0; j < m_; ++j)
        for (int i = j; i < m_; ++i) lpos.emplace_back(i, j);
    const int tri = tri_size(m_);
    for (int g = 0; g < tri; ++g)
        for (int h2 = g; h2 < tri; ++h2) {
            if (lpos[g].second != lpos[h2].second) continue;
            MatrixXd& d2 = out[sym_index(g, h2, d_)];
            d2(lpos[g].first, lpos[h2].first) += 1.0;
            d2(lpos[h2].first, lpos[g].first) += 1.0;
        }
    const long top = std::min<long>(K_, h.effective_length());
    for (long lag = 1; lag <= top; ++lag) {
        const VectorXd x = h.vec(lag);
        const int off = tri + static_cast<int>(lag - 1) * m_ * m_;
        for (int b = 0; b < m_; ++b)
            for (int a = 0; a < m_; ++a)
                for (int e = 0; e < m_; ++e)
                    for (int c = 0; c < m_; ++c) {
                        const int g1 = off + b * m_ + a;
                        const int g2 = off + e * m_ + c;
                        if (g2 < g1) continue;
                        MatrixXd& d2 = out[sym_index(g1, g2, d_)];
                        d2(a, c) += x[b] * x[e];
                        d2(c, a) += x[b] * x[e];
                    }
    }
    (void)base;
}

double MvArchModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::M || j < 1 || j > K_ || order > 2) return 0.0;
    if (order == 0) return spectral_norm(unpack_B(theta, j));
    return 1.0;  // unit-norm entry perturbations
}

DecayTag MvArchModel::alpha_decay(Psi psi, int, const VectorXd&) const {
    if (psi != Psi::M) return DecayTag::finite(0);
    return DecayTag::finite(K_);
}

BuiltModel make_mvarch(const MvArchCoeffs& c) {
    const int m = static_cast<int>(c.B0.rows());
    if (c.B0.cols() != m) throw ContractError("make_mvarch: B0 must be square");
    Eigen::LLT<MatrixXd> llt(c.B0);
    if (llt.info() != Eigen::Success)
        throw ContractError("make_mvarch: B0 must be symmetric positive definite");
    const MatrixXd L0 = llt.matrixL();
    const int K = static_cast<int>(c.B.size());
    for (const auto& B : c.B)
        if (B.rows() != m || B.cols() != m)
            throw ContractError("make_mvarch: B_j must be m x m");

    const int d = tri_size(m) + K * m * m;
    VectorXd theta = VectorXd::Zero(d), lo(d), hi(d);
    pack_lower(L0, theta, 0);
    for (int j = 0; j < K; ++j)
        theta.segment(tri_size(m) + j * m * m, m * m) = vec_of(c.B[j]);
    int g = 0;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i, ++g) {
            if (i == j) {
                lo[g] = kDiagFloor;
                hi[g] = std::max(3.0 * theta[g], 1.0);
            } else {
                const double r = std::max(0.5, std::fabs(theta[g]));
                lo[g] = theta[g] - r;
                hi[g] = theta[g] + r;
            }
        }
    for (; g < d; ++g) {
        const double r = std::max(0.5, std::fabs(theta[g]));
        lo[g] = theta[g] - r;
        hi[g] = theta[g] + r;
    }
    BuiltModel out;
    out.model = std::make_shared<MvArchModel>(m, K);
    out.theta = ParamVector(theta, lo, hi);
    return out;
}

// --- BekkModel -----------------------------------------------------------------

namespace {

struct BekkCtx final : Model::Ctx {
    int order = 0;
    long J = 0;
    MatrixXd B0;                                   // m x m
    MatrixXd dvecB0;                               // m^2 x d
    MatrixXd d2vecB0;                              // m^2 x sym(d)
    std::vector<MatrixXd> A;                       // J starred operators
    std::vector<std::vector<MatrixXd>> dA;         // [J][d]
    std::vector<std::vector<MatrixXd>> d2A;        // [J][sym(d)]
};

enum class BekkBlock { Const, Arch, Var };

struct BekkCoord {
    BekkBlock block;
    int lag;   // 1-based within block (0 for Const)
    int row, col;
};

}  // namespace

BekkModel::BekkModel(int m, int q, int qp)
    : Model(m, m, tri_size(m) + (q + qp) * m * m, Route::M, /*zero_mean=*/true),
      q_(q),
      qp_(qp) {
    if (m < 1 || q < 0 || qp < 0) throw ContractError("bekk: need m >= 1, q, q' >= 0");
}

BekkCoeffs BekkModel::unpack(const VectorXd& theta) const {
    if (theta.size() != d_) throw ContractError("bekk: theta dimension");
    BekkCoeffs b;
    b.C0 = unpack_lower(theta, 0, m_);
    int off = tri_size(m_);
    for (int i = 0; i < q_; ++i, off += m_ * m_) b.C.push_back(unpack_full(theta, off, m_));
    for (int k = 0; k < qp_; ++k, off += m_ * m_) b.D.push_back(unpack_full(theta, off, m_));
    return b;
}

namespace {

std::vector<BekkCoord> bekk_coords(int m, int q, int qp) {
    std::vector<BekkCoord> coords;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i) coords.push_back({BekkBlock::Const, 0, i, j});
    for (int lag = 1; lag <= q; ++lag)
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) coords.push_back({BekkBlock::Arch, lag, i, j});
    for (int lag = 1; lag <= qp; ++lag)
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) coords.push_back({BekkBlock::Var, lag, i, j});
    return coords;
}

MatrixXd unit_matrix(int m, int i, int j) {
    MatrixXd E = MatrixXd::Zero(m, m);
    E(i, j) = 1.0;
    return E;
}

}  // namespace

long BekkModel::suggested_lag_truncation(const VectorXd& theta) const {
    const BekkCoeffs b = unpack(theta);
    const long J = 4096;
    // Grow until the geometric tail of sqrt||A*_j|| is negligible.
    const int m2 = m_ * m_;
    std::vector<MatrixXd> Dstar(qp_), Cstar(q_);
    for (int k = 0; k < qp_; ++k) Dstar[k] = kron_square(b.D[k]);
    for (int i = 0; i < q_; ++i) Cstar[i] = kron_square(b.C[i]);
    const double rho = qp_ ? companion_spectral_radius(Dstar, m2) : 0.0;
    const double rate = std::min(std::sqrt(std::max(rho, 0.0)) + 1e-9, 0.999999);
    std::vector<MatrixXd> A;
    int quiet = 0;
    for (long j = 1; j <= J; ++j) {
        MatrixXd Aj = (j <= q_) ? Cstar[j - 1] : MatrixXd::Zero(m2, m2);
        for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k) Aj += Dstar[k - 1] * A[j - k - 1];
        A.push_back(Aj);
        const double a = std::sqrt(spectral_norm(Aj));
        const double tail = (rate > 0) ? a * rate / (1.0 - rate) : 0.0;
        quiet = (tail < 1e-12 && j >= q_) ? quiet + 1 : 0;
        if (quiet >= 3) return j;
    }
    return J;
}

std::unique_ptr<const Model::Ctx> BekkModel::make_ctx(const VectorXd& theta, int order) const {
    const BekkCoeffs b = unpack(theta);
    const int m = m_, m2 = m_ * m_;
    auto ctx = std::make_unique<BekkCtx>();
    ctx->theta = theta;
    ctx->order = order;
    ctx->J = suggested_lag_truncation(theta);
    const long J = ctx->J;

    std::vector<MatrixXd> Dstar(qp_), Cstar(q_);
    for (int k = 0; k < qp_; ++k) Dstar[k] = kron_square(b.D[k]);
    for (int i = 0; i < q_; ++i) Cstar[i] = kron_square(b.C[i]);
    if (qp_ > 0 && companion_spectral_radius(Dstar, m2) >= 1.0)
        throw DivergenceError("bekk: variance feedback spectral radius >= 1");

    MatrixXd S = MatrixXd::Identity(m2, m2);
    for (const auto& Dk : Dstar) S -= Dk;
    Eigen::PartialPivLU<MatrixXd> Slu(S);
    const VectorXd vecB0 = Slu.solve(vec_of(MatrixXd(b.C0 * b.C0.transpose())));
    ctx->B0 = unvec(vecB0, m);

    ctx->A.assign(J, MatrixXd::Zero(m2, m2));
    for (long j = 1; j <= J; ++j) {
        MatrixXd Aj = (j <= q_) ? Cstar[j - 1] : MatrixXd::Zero(m2, m2);
        for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k)
            Aj += Dstar[k - 1] * ctx->A[j - k - 1];
        ctx->A[j - 1] = Aj;
    }
    if (order < 1) return ctx;

    const auto coords = bekk_coords(m, q_, qp_);
    // First derivatives of the starred operators and the constant.
    std::vector<MatrixXd> dCstar(d_), dDstar(d_);  // nonzero only on own block
    ctx->dvecB0 = MatrixXd::Zero(m2, d_);
    for (int g = 0; g < d_; ++g) {
        const auto& cd = coords[g];
        const MatrixXd E = unit_matrix(m, cd.row, cd.col);
        VectorXd rhs = VectorXd::Zero(m2);
        if (cd.block == BekkBlock::Const)
            rhs = vec_of(MatrixXd(E * b.C0.transpose() + b.C0 * E.transpose()));
        else if (cd.block == BekkBlock::Arch)
            dCstar[g] = kron(E, b.C[cd.lag - 1]) + kron(b.C[cd.lag - 1], E);
        else {
            dDstar[g] = kron(E, b.D[cd.lag - 1]) + kron(b.D[cd.lag - 1], E);
            rhs += dDstar[g] * vecB0;
        }
        ctx->dvecB0.col(g) = Slu.solve(rhs);
    }
    ctx->dA.assign(J, std::vector<MatrixXd>(d_, MatrixXd::Zero(m2, m2)));
    for (long j = 1; j <= J; ++j)
        for (int g = 0; g < d_; ++g) {
            const auto& cd = coords[g];
            MatrixXd dAj = MatrixXd::Zero(m2, m2);
            if (cd.block == BekkBlock::Arch && cd.lag == j) dAj += dCstar[g];
            for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k) {
                if (cd.block == BekkBlock::Var && cd.lag == k)
                    dAj += dDstar[g] * ctx->A[j - k - 1];
                dAj += Dstar[k - 1] * ctx->dA[j - k - 1][g];
            }
            ctx->dA[j - 1][g] = dAj;
        }
    if (order < 2) return ctx;

    const int sym = sym_size(d_);
    ctx->d2vecB0 = MatrixXd::Zero(m2, sym);
    ctx->d2A.assign(J, std::vector<MatrixXd>(sym, MatrixXd::Zero(m2, m2)));
    for (int g = 0; g < d_; ++g)
        for (int h2 = g; h2 < d_; ++h2) {
            const auto &c1 = coords[g], &c2 = coords[h2];
            const int s = sym_index(g, h2, d_);
            const MatrixXd E1 = unit_matrix(m, c1.row, c1.col);
            const MatrixXd E2 = unit_matrix(m, c2.row, c2.col);
            const bool same_block = c1.block == c2.block && c1.lag == c2.lag;

            // d2 of the starred operator of the shared block (zero otherwise).
            MatrixXd d2star;
            if (same_block && c1.block != BekkBlock::Const)
                d2star = kron(E1, E2) + kron(E2, E1);

            VectorXd rhs = VectorXd::Zero(m2);
            if (same_block && c1.block == BekkBlock::Const)
                rhs += vec_of(MatrixXd(E1 * E2.transpose() + E2 * E1.transpose()));
            if (same_block && c1.block == BekkBlock::Var) rhs += d2star * vecB0;
            if (c1.block == BekkBlock::Var) rhs += dDstar[g] * ctx->dvecB0.col(h2);
            if (c2.block == BekkBlock::Var) rhs += dDstar[h2] * ctx->dvecB0.col(g);
            ctx->d2vecB0.col(s) = Slu.solve(rhs);

            for (long j = 1; j <= J; ++j) {
                MatrixXd d2Aj = MatrixXd::Zero(m2, m2);
                if (same_block && c1.block == BekkBlock::Arch && c1.lag == j) d2Aj += d2star;
                for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k) {
                    if (same_block && c1.block == BekkBlock::Var && c1.lag == k)
                        d2Aj += d2star * ctx->A[j - k - 1];
                    if (c1.block == BekkBlock::Var && c1.lag == k)
                        d2Aj += dDstar[g] * ctx->dA[j - k - 1][h2];
                    if (c2.block == BekkBlock::Var && c2.lag == k)
                        d2Aj += dDstar[h2] * ctx->dA[j - k - 1][g];
                    d2Aj += Dstar[k - 1] * ctx->d2A[j - k - 1][s];
                }
                ctx->d2A[j - 1][s] = d2Aj;
            }
        }
    return ctx;
}

void BekkModel::H(const Ctx& base, const History& h, MatrixXd& out) const {
    const auto& ctx = static_cast<const BekkCtx&>(base);
    out = ctx.B0;
    const long top = std::min(ctx.J, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        out += unvec(ctx.A[j - 1] * vec_of(MatrixXd(x * x.transpose())), m_);
    }
}

void BekkModel::H_grad(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    const auto& ctx = static_cast<const BekkCtx&>(base);
    if (ctx.order < 1) throw ContractError("bekk: ctx built without first derivatives");
    out.assign(d_, MatrixXd(m_, m_));
    const long top = std::min(ctx.J, h.effective_length());
    std::vector<VectorXd> sq;
    sq.reserve(top);
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        sq.push_back(vec_of(MatrixXd(x * x.transpose())));
    }
    for (int g = 0; g < d_; ++g) {
        VectorXd acc = ctx.dvecB0.col(g);
        for (long j = 1; j <= top; ++j) acc += ctx.dA[j - 1][g] * sq[j - 1];
        out[g] = unvec(acc, m_);
    }
}

void BekkModel::H_hess(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    const auto& ctx = static_cast<const BekkCtx&>(base);
    if (ctx.order < 2) throw ContractError("bekk: ctx built without second derivatives");
    const int sym = sym_size(d_);
    out.assign(sym, MatrixXd(m_, m_));
    const long top = std::min(ctx.J, h.effective_length());
    std::vector<VectorXd> sq;
    sq.reserve(top);
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        sq.push_back(vec_of(MatrixXd(x * x.transpose())));
    }
    for (int s = 0; s < sym; ++s) {
        VectorXd acc = ctx.d2vecB0.col(s);
        for (long j = 1; j <= top; ++j) acc += ctx.d2A[j - 1][s] * sq[j - 1];
        out[s] = unvec(acc, m_);
    }
}

double BekkModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::M || j < 1 || order > 2) return 0.0;
    auto ctx = make_ctx(theta, order);
    const auto& bc = static_cast<const BekkCtx&>(*ctx);
    if (j > bc.J) {
        // Past the cached horizon the geometric tail is below 1e-12.
        return 0.0;
    }
    if (order == 0) return std::sqrt(spectral_norm(bc.A[j - 1]));
    double best = 0.0;
    if (order == 1)
        for (int g = 0; g < d_; ++g) best = std::max(best, spectral_norm(bc.dA[j - 1][g]));
    else
        for (int s = 0; s < sym_size(d_); ++s)
            best = std::max(best, spectral_norm(bc.d2A[j - 1][s]));
    return std::sqrt(best);
}

DecayTag BekkModel::alpha_decay(Psi psi, int, const VectorXd& theta) const {
    if (psi != Psi::M) return DecayTag::finite(0);
    if (qp_ == 0) return DecayTag::finite(q_);
    const BekkCoeffs b = unpack(theta);
    std::vector<MatrixXd> Dstar(qp_);
    for (int k = 0; k < qp_; ++k) Dstar[k] = kron_square(b.D[k]);
    const double rho = companion_spectral_radius(Dstar, m_ * m_);
    if (rho <= 0.0) return DecayTag::finite(q_);
    return DecayTag::geometric(std::min(std::sqrt(rho) + 1e-9, 0.999999));
}

BuiltModel make_bekk(const BekkCoeffs& c) {
    const int m = static_cast<int>(c.C0.rows());
    if (c.C0.cols() != m) throw ContractError("make_bekk: C0 must be square");
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::fabs(c.C0(i, j)) > 1e-12)
                throw ContractError("make_bekk: C0 must be lower triangular");
    if (!(c.C0.determinant() > 0.0)) throw ContractError("make_bekk: det C0 must be > 0");
    for (const auto& M : c.C)
        if (M.rows() != m || M.cols() != m) throw ContractError("make_bekk: C_i must be m x m");
    for (const auto& M : c.D)
        if (M.rows() != m || M.cols() != m) throw ContractError("make_bekk: D_k must be m x m");
    if (!c.D.empty()) {
        std::vector<MatrixXd> Dstar;
        for (const auto& Dk : c.D) Dstar.push_back(kron_square(Dk));
        if (companion_spectral_radius(Dstar, m * m) >= 1.0)
            throw DivergenceError("make_bekk: variance feedback spectral radius >= 1");
    }

    const int q = static_cast<int>(c.C.size());
    const int qp = static_cast<int>(c.D.size());
    const int d = tri_size(m) + (q + qp) * m * m;
    VectorXd theta = VectorXd::Zero(d), lo(d), hi(d);
    pack_lower(c.C0, theta, 0);
    int off = tri_size(m);
    for (const auto& M : c.C) {
        theta.segment(off, m * m) = vec_of(M);
        off += m * m;
    }
    for (const auto& M : c.D) {
        theta.segment(off, m * m) = vec_of(M);
        off += m * m;
    }

    const auto coords = bekk_coords(m, q, qp);
    for (int g = 0; g < d; ++g) {
        const auto& cd = coords[g];
        const bool diag = cd.row == cd.col;
        if (cd.block == BekkBlock::Const && diag) {
            lo[g] = kDiagFloor;
            hi[g] = std::max(3.0 * theta[g], 1.0);
        } else if (diag && theta[g] >= 0.0) {
            // Pin the sign indeterminacy C_i -> -C_i at nonnegative diagonals.
            lo[g] = 0.0;
            hi[g] = std::max(2.0 * theta[g], 0.9);
        } else {
            const double r = std::max(0.3, std::fabs(theta[g]));
            lo[g] = theta[g] - r;
            hi[g] = theta[g] + r;
        }
    }
    BuiltModel out;
    out.model = std::make_shared<BekkModel>(m, q, qp);
    out.theta = ParamVector(theta, lo, hi);
    return out;
}

// --- NlarchModel -----------------------------------------------------------------

namespace {
struct NlarchCtx final : Model::Ctx {};
}  // namespace

NlarchModel::NlarchModel(int m, int K)
    : Model(m, m, m + 2 * K * m * m, Route::M, /*zero_mean=*/true), K_(K) {
    if (m < 1 || K < 0) throw ContractError("nlarch: need m >= 1, K >= 0");
}

std::unique_ptr<const Model::Ctx> NlarchModel::make_ctx(const VectorXd& theta, int) const {
    if (theta.size() != d_) throw ContractError("nlarch: theta dimension");
    auto ctx = std::make_unique<NlarchCtx>();
    ctx->theta = theta;
    return ctx;
}

VectorXd NlarchModel::vol(const VectorXd& th, const History& h) const {
    VectorXd v = th.head(m_);
    const long top = std::min<long>(K_, h.effective_length());
    const int m2 = m_ * m_;
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        const VectorXd xp = x.cwiseMax(0.0), xm = x.cwiseMin(0.0);
        const int off = m_ + static_cast<int>(j - 1) * 2 * m2;
        v += unvec(th.segment(off, m2), m_) * xp - unvec(th.segment(off + m2, m2), m_) * xm;
    }
    return v;
}

void NlarchModel::M(const Ctx& ctx, const History& h, MatrixXd& out) const {
    out = vol(ctx.theta, h).asDiagonal();
}

void NlarchModel::H(const Ctx& ctx, const History& h, MatrixXd& out) const {
    const VectorXd v = vol(ctx.theta, h);
    out = v.cwiseProduct(v).asDiagonal();
}

namespace {

// dv/dtheta for the NLARCH volatility vector; m x d, sparse pattern.
MatrixXd nlarch_dv(int m, int K, const History& h) {
    const int m2 = m * m;
    MatrixXd dv = MatrixXd::Zero(m, m + 2 * K * m2);
    dv.leftCols(m).setIdentity();
    const long top = std::min<long>(K, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const VectorXd x = h.vec(j);
        const int off = m + static_cast<int>(j - 1) * 2 * m2;
        for (int b = 0; b < m; ++b)
            for (int a = 0; a < m; ++a) {
                dv(a, off + b * m + a) = std::max(x[b], 0.0);
                dv(a, off + m2 + b * m + a) = -std::min(x[b], 0.0);
            }
    }
    return dv;
}

}  // namespace

void NlarchModel::H_grad(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    const VectorXd v = vol(ctx.theta, h);
    const MatrixXd dv = nlarch_dv(m_, K_, h);
    out.assign(d_, MatrixXd::Zero(m_, m_));
    for (int g = 0; g < d_; ++g)
        for (int i = 0; i < m_; ++i) out[g](i, i) = 2.0 * v[i] * dv(i, g);
}

void NlarchModel::H_hess(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    const MatrixXd dv = nlarch_dv(m_, K_, h);
    out.assign(sym_size(d_), MatrixXd::Zero(m_, m_));
    for (int g = 0; g < d_; ++g)
        for (int h2 = g; h2 < d_; ++h2) {
            MatrixXd& d2 = out[sym_index(g, h2, d_)];
            for (int i = 0; i < m_; ++i) d2(i, i) = 2.0 * dv(i, g) * dv(i, h2);
        }
    (void)ctx;
}

double NlarchModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::M || j < 1 || j > K_ || order > 1) return 0.0;
    if (order == 1) return 1.0;
    const int m2 = m_ * m_;
    const int off = m_ + static_cast<int>(j - 1) * 2 * m2;
    const MatrixXd Bp = unvec(theta.segment(off, m2), m_);
    const MatrixXd Bm = unvec(theta.segment(off + m2, m2), m_);
    return spectral_norm(Bp.cwiseMax(Bm));
}

DecayTag NlarchModel::alpha_decay(Psi psi, int order, const VectorXd&) const {
    if (psi != Psi::M || order > 1) return DecayTag::finite(0);
    return DecayTag::finite(K_);
}

BuiltModel make_nlarch(const NlarchCoeffs& c) {
    const int m = static_cast<int>(c.B0.size());
    if (m < 1) throw ContractError("make_nlarch: B0 must be nonempty");
    for (int i = 0; i < m; ++i)
        if (!(c.B0[i] > 0.0)) throw ContractError("make_nlarch: B0 components must be > 0");
    if (c.B_plus.size() != c.B_minus.size())
        throw ContractError("make_nlarch: B_plus/B_minus length mismatch");
    const int K = static_cast<int>(c.B_plus.size());
    for (int j = 0; j < K; ++j) {
        if (c.B_plus[j].rows() != m || c.B_plus[j].cols() != m || c.B_minus[j].rows() != m ||
            c.B_minus[j].cols() != m)
            throw ContractError("make_nlarch: B_j^+/- must be m x m");
        if ((c.B_plus[j].array() < 0.0).any() || (c.B_minus[j].array() < 0.0).any())
            throw ContractError("make_nlarch: B_j^+/- entries must be >= 0");
    }
    const int m2 = m * m;
    const int d = m + 2 * K * m2;
    VectorXd theta(d), lo(d), hi(d);
    for (int i = 0; i < m; ++i) {
        theta[i] = c.B0[i];
        lo[i] = kDiagFloor;
        hi[i] = std::max(3.0 * c.B0[i], 1.0);
    }
    for (int j = 0; j < K; ++j) {
        const int off = m + j * 2 * m2;
        theta.segment(off, m2) = vec_of(c.B_plus[j]);
        theta.segment(off + m2, m2) = vec_of(c.B_minus[j]);
    }
    for (int g = m; g < d; ++g) {
        lo[g] = 0.0;
        hi[g] = std::max(3.0 * theta[g], 1.0);
    }
    BuiltModel out;
    out.model = std::make_shared<NlarchModel>(m, K);
    out.theta = ParamVector(theta, lo, hi);
    return out;
}

}  // namespace qmle

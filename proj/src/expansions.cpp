#include "qmle/zoo/expansions.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "qmle/errors.hpp"

namespace qmle {

namespace {

// Roots of 1 - sum_{i=1}^k p_i z^i via the companion matrix of the reversed
// polynomial; empty when all p_i are ~0.
std::vector<std::complex<double>> lag_poly_roots(const std::vector<double>& p) {
    int k = static_cast<int>(p.size());
    while (k > 0 && std::fabs(p[k - 1]) < 1e-14) --k;
    std::vector<std::complex<double>> roots;
    if (k == 0) return roots;
    // 1 - p_1 z - ... - p_k z^k = 0  <=>  z^k - (p_1/p_k... ) handled via
    // companion of q(z) = z^k - sum (p_i / p_k?) ... use monic form on w = z:
    // p_k z^k + ... + p_1 z - 1 = 0 (sign-flipped).
    MatrixXd comp = MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        // coefficients of z^i in (sum p_j z^j - 1): a_0 = -1, a_i = p_i
        const double ai = (i == 0) ? -1.0 : p[i - 1];
        comp(i, k - 1) = -ai / p[k - 1];
        if (i > 0) comp(i, i - 1) = 1.0;
    }
    Eigen::EigenSolver<MatrixXd> es(comp, /*computeEigenvectors=*/false);
    for (int i = 0; i < k; ++i) roots.push_back(es.eigenvalues()[i]);
    return roots;
}

std::complex<double> eval_numerator(const std::vector<double>& c, std::complex<double> z) {
    std::complex<double> acc(0, 0), zp = z;
    for (double ci : c) {
        acc += ci * zp;
        zp *= z;
    }
    return acc;
}

}  // namespace

double companion_spectral_radius(const std::vector<double>& p) {
    double r = 0.0;
    for (const auto& z : lag_poly_roots(p))
        if (std::abs(z) > 1e-14) r = std::max(r, 1.0 / std::abs(z));
    return r;
}

double companion_spectral_radius(const std::vector<MatrixXd>& P, int m) {
    const int s = static_cast<int>(P.size());
    if (s == 0) return 0.0;
    MatrixXd comp = MatrixXd::Zero(s * m, s * m);
    for (int i = 0; i < s; ++i) {
        comp.block(0, i * m, m, m) = P[i];
        if (i + 1 < s) comp.block((i + 1) * m, i * m, m, m) = MatrixXd::Identity(m, m);
    }
    return comp.eigenvalues().cwiseAbs().maxCoeff();
}

ArchInfCoeffs garch_to_arch_coeffs(const GarchCoeffs& g, long J) {
    if (J < 1) throw ContractError("garch_to_arch_coeffs: J must be >= 1");
    const double dsum = std::accumulate(g.d.begin(), g.d.end(), 0.0);
    if (dsum >= 1.0) throw DivergenceError("garch_to_arch_coeffs: sum d_j >= 1");
    ArchInfCoeffs out;
    out.b0 = g.c0 / (1.0 - dsum);
    out.b.assign(static_cast<std::size_t>(J), 0.0);
    const long q = static_cast<long>(g.c.size());
    const long qp = static_cast<long>(g.d.size());
    for (long i = 1; i <= J; ++i) {
        double bi = (i <= q) ? g.c[i - 1] : 0.0;
        for (long k = 1; k <= std::min(i - 1, qp); ++k) bi += g.d[k - 1] * out.b[i - k - 1];
        out.b[i - 1] = bi;
    }
    const double rho = companion_spectral_radius(g.d);
    out.decay = (rho > 0) ? DecayTag::geometric(std::min(rho + 1e-12, 0.999999))
                          : DecayTag::finite(q);
    return out;
}

bool garch_polynomials_coprime(const GarchCoeffs& g, double tol) {
    // The numerator sum c_i z^i must not vanish at any root of 1 - sum d_i z^i.
    for (const auto& z : lag_poly_roots(g.d))
        if (std::abs(eval_numerator(g.c, z)) < tol) return false;
    return true;
}

MatrixXd kron_square(const MatrixXd& A) {
    const int r = static_cast<int>(A.rows()), c = static_cast<int>(A.cols());
    MatrixXd K(r * r, c * c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) K.block(i * r, j * c, r, c) = A(i, j) * A;
    return K;
}

BekkExpansion bekk_expand(const BekkCoeffs& b, long J) {
    const int m = static_cast<int>(b.C0.rows());
    if (b.C0.cols() != m) throw ContractError("bekk: C0 must be square");
    const int m2 = m * m;
    const long q = static_cast<long>(b.C.size());
    const long qp = static_cast<long>(b.D.size());

    std::vector<MatrixXd> Dstar(qp), Cstar(q);
    for (long k = 0; k < qp; ++k) Dstar[k] = kron_square(b.D[k]);
    for (long i = 0; i < q; ++i) Cstar[i] = kron_square(b.C[i]);

    if (qp > 0) {
        const double rho = companion_spectral_radius(Dstar, m2);
        if (rho >= 1.0)
            throw DivergenceError("bekk_expand: variance feedback spectral radius >= 1");
    }

    BekkExpansion out;
    MatrixXd S = MatrixXd::Identity(m2, m2);
    for (long k = 0; k < qp; ++k) S -= Dstar[k];
    Eigen::VectorXd vecC0sq(m2);
    const MatrixXd c0sq = b.C0 * b.C0.transpose();
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) vecC0sq[i + m * j] = c0sq(i, j);
    const Eigen::VectorXd vb0 = S.partialPivLu().solve(vecC0sq);
    out.B0.resize(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) out.B0(i, j) = vb0[i + m * j];

    out.A_star.assign(static_cast<std::size_t>(J), MatrixXd::Zero(m2, m2));
    for (long i = 1; i <= J; ++i) {
        MatrixXd Ai = (i <= q) ? Cstar[i - 1] : MatrixXd::Zero(m2, m2);
        for (long k = 1; k <= std::min(i - 1, qp); ++k) Ai += Dstar[k - 1] * out.A_star[i - k - 1];
        out.A_star[i - 1] = Ai;
    }
    return out;
}

std::vector<MatrixXd> bekk_to_mvarch_coeffs(const BekkCoeffs& b, long J) {
    const int m = static_cast<int>(b.C0.rows());
    const BekkExpansion ex = bekk_expand(b, J);
    std::vector<MatrixXd> out;
    out.reserve(ex.A_star.size());
    // Nearest Kronecker square: rearrange A* so that A* = B (x) B becomes the
    // rank-one matrix vec(B) vec(B)', then take the top eigenpair.
    for (const MatrixXd& K : ex.A_star) {
        MatrixXd R(m * m, m * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l)
                        R(i + m * j, k + m * l) = K(i * m + k, j * m + l);
        R = 0.5 * (R + R.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
        const int top = m * m - 1;
        const double lam = std::max(es.eigenvalues()[top], 0.0);
        VectorXd v = es.eigenvectors().col(top) * std::sqrt(lam);
        int argmax = 0;
        v.cwiseAbs().maxCoeff(&argmax);
        if (v[argmax] < 0) v = -v;
        MatrixXd B(m, m);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) B(i, j) = v[i + m * j];
        out.push_back(std::move(B));
    }
    return out;
}

std::vector<MatrixXd> arma_to_ar_coeffs(const std::vector<MatrixXd>& Phi,
                                        const std::vector<MatrixXd>& Psi, int m, long J) {
    if (!Psi.empty() && companion_spectral_radius(Psi, m) >= 1.0)
        throw DivergenceError("arma_to_ar_coeffs: Psi(L) not invertible");
    const long s = static_cast<long>(Phi.size());
    const long sp = static_cast<long>(Psi.size());
    std::vector<MatrixXd> gamma(static_cast<std::size_t>(J), MatrixXd::Zero(m, m));
    for (long j = 1; j <= J; ++j) {
        MatrixXd g = MatrixXd::Zero(m, m);
        if (j <= sp) g += Psi[j - 1];
        if (j <= s) g -= Phi[j - 1];
        for (long k = 1; k <= std::min(j - 1, sp); ++k) g += Psi[k - 1] * gamma[j - k - 1];
        gamma[j - 1] = g;
    }
    return gamma;
}

DiagVarExpansion diag_var_expand(const VectorXd& c0, const std::vector<MatrixXd>& C,
                                 const std::vector<MatrixXd>& D, long J) {
    const int m = static_cast<int>(c0.size());
    if (!D.empty() && companion_spectral_radius(D, m) >= 1.0)
        throw DivergenceError("diag_var_expand: variance feedback spectral radius >= 1");
    DiagVarExpansion out;
    MatrixXd S = MatrixXd::Identity(m, m);
    for (const auto& Dk : D) S -= Dk;
    out.b0 = S.partialPivLu().solve(c0);
    const long q = static_cast<long>(C.size());
    const long qp = static_cast<long>(D.size());
    out.B.assign(static_cast<std::size_t>(J), MatrixXd::Zero(m, m));
    for (long i = 1; i <= J; ++i) {
        MatrixXd Bi = (i <= q) ? C[i - 1] : MatrixXd::Zero(m, m);
        for (long k = 1; k <= std::min(i - 1, qp); ++k) Bi += D[k - 1] * out.B[i - k - 1];
        out.B[i - 1] = Bi;
    }
    return out;
}

}  // namespace qmle

#pragma once

#include <complex>
#include <vector>

#include "qmle/zoo/coeffs.hpp"

namespace qmle {

/// GARCH(q,q') -> ARCH(inf): b0 = c0 / (1 - sum d) and b_i from the linear
/// recursion b_i = c_i + sum_k d_k b_{i-k}, truncated at lag J.
ArchInfCoeffs garch_to_arch_coeffs(const GarchCoeffs& g, long J);

/// True when sum c_i z^i and 1 - sum d_i z^i share no root (within tol).
bool garch_polynomials_coprime(const GarchCoeffs& g, double tol = 1e-8);

/// Kronecker square A (x) A.
MatrixXd kron_square(const MatrixXd& A);

/// Starred BEKK expansion operators A*_i (m^2 x m^2) with
/// A*_i = C*_i + sum_k D*_k A*_{i-k}, plus the expanded constant B0 with
/// vec(B0) = (I - sum D*)^{-1} vec(C0 C0').
struct BekkExpansion {
    MatrixXd B0;
    std::vector<MatrixXd> A_star;  // A_star[i-1] = A*_i
};
BekkExpansion bekk_expand(const BekkCoeffs& b, long J);

/// Derived m x m matrices B_j with B_j (x) B_j ~= A*_j (nearest Kronecker
/// square; exact when q' <= 1). Sign fixed so the largest-magnitude entry is
/// positive.
std::vector<MatrixXd> bekk_to_mvarch_coeffs(const BekkCoeffs& b, long J);

/// AR(inf) matrices of Gamma(L) = Psi(L)^{-1} Phi(L) = I + sum Gamma_i L^i,
/// via Gamma_j = Psi_j - Phi_j + sum_k Psi_k Gamma_{j-k}.
std::vector<MatrixXd> arma_to_ar_coeffs(const std::vector<MatrixXd>& Phi,
                                        const std::vector<MatrixXd>& Psi, int m, long J);

/// Matrix variance expansion B_i = C_i + sum_k D_k B_{i-k} (ARMA-GARCH
/// diagonal recursion), plus b0 = (I - sum D)^{-1} c0.
struct DiagVarExpansion {
    VectorXd b0;
    std::vector<MatrixXd> B;
};
DiagVarExpansion diag_var_expand(const VectorXd& c0, const std::vector<MatrixXd>& C,
                                 const std::vector<MatrixXd>& D, long J);

/// Spectral radius of the block companion matrix of I - sum P_i z^i; the
/// polynomial is invertible on the closed unit disc iff this is < 1.
double companion_spectral_radius(const std::vector<MatrixXd>& P, int m);

/// Largest-modulus eigenvalue check for scalar lag polynomials.
double companion_spectral_radius(const std::vector<double>& p);

}  // namespace qmle

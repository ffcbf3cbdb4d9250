#pragma once

#include <vector>

#include "qmle/types.hpp"

namespace qmle {

/// Univariate ARCH(inf) coefficients. Either an explicit finite lag list, or
/// the power-law scheme b_j = scale * j^(-ell) when `power_law` is set.
struct ArchInfCoeffs {
    double b0 = 0.0;
    std::vector<double> b;  // b[j-1] = b_j (finite scheme)
    bool power_law = false;
    double scale = 0.0;  // power-law scale
    double ell = 0.0;    // power-law exponent
    DecayTag decay = DecayTag::finite(0);
};

struct GarchCoeffs {
    double c0 = 0.0;
    std::vector<double> c;  // ARCH lags c_1..c_q
    std::vector<double> d;  // GARCH lags d_1..d_q'
};

struct TarchCoeffs {
    double b0 = 0.0;
    std::vector<double> b_plus;
    std::vector<double> b_minus;
};

struct BekkCoeffs {
    MatrixXd C0;              // det C0 > 0; constant term is C0 C0'
    std::vector<MatrixXd> C;  // q matrices
    std::vector<MatrixXd> D;  // q' matrices
};

/// Multivariate ARCH(inf): H = B0 + sum_j B_j x_j x_j' B_j'.
struct MvArchCoeffs {
    MatrixXd B0;
    std::vector<MatrixXd> B;
};

/// Diagonal-innovation NLARCH: component i of the volatility vector is
/// B0_i + sum_j [B+_j max(x,0) - B-_j min(x,0)]_i (multidimensional TARCH).
struct NlarchCoeffs {
    VectorXd B0;
    std::vector<MatrixXd> B_plus;   // lag -> m x m nonnegative matrix
    std::vector<MatrixXd> B_minus;
};

/// Nonlinear AR with linear lag maps: f = a0 + sum_j A_j x_j, M = I.
struct NlarCoeffs {
    VectorXd a0;
    std::vector<MatrixXd> A;
};

struct ArmaGarchCoeffs {
    std::vector<MatrixXd> Phi;  // AR polynomial I - sum Phi_i L^i
    std::vector<MatrixXd> Psi;  // MA polynomial I - sum Psi_i L^i
    VectorXd c0;                // variance intercept (diagonal of H)
    std::vector<MatrixXd> C;    // on squared residuals
    std::vector<MatrixXd> D;    // on lagged variance
};

}  // namespace qmle

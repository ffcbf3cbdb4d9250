#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qmle/errors.hpp"

namespace qmle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Parameter vector together with the compact box it lives in.
struct ParamVector {
    VectorXd values;
    VectorXd lo;
    VectorXd hi;

    ParamVector() = default;
    ParamVector(VectorXd v, VectorXd lo_, VectorXd hi_)
        : values(std::move(v)), lo(std::move(lo_)), hi(std::move(hi_)) {
        validate();
    }

    int dim() const { return static_cast<int>(values.size()); }

    void validate() const {
        if (values.size() < 1) throw ContractError("ParamVector: d must be >= 1");
        if (lo.size() != values.size() || hi.size() != values.size())
            throw ContractError("ParamVector: bounds/value size mismatch");
        for (int i = 0; i < values.size(); ++i) {
            if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !std::isfinite(values[i]))
                throw ContractError("ParamVector: non-finite entry or bound");
            if (lo[i] > hi[i]) throw ContractError("ParamVector: lo > hi");
            if (values[i] < lo[i] || values[i] > hi[i])
                throw ContractError("ParamVector: value outside bounds");
        }
    }

    bool contains(const VectorXd& theta) const {
        if (theta.size() != values.size()) return false;
        for (int i = 0; i < theta.size(); ++i)
            if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
        return true;
    }

    VectorXd center() const { return 0.5 * (lo + hi); }
};

/// Observed or simulated path, row t (0-based) holds X_{t+1}.
struct Series {
    MatrixXd data;

    Series() = default;
    explicit Series(MatrixXd d) : data(std::move(d)) {}

    long n() const { return data.rows(); }
    int m() const { return static_cast<int>(data.cols()); }

    bool all_finite() const { return data.allFinite(); }
};

// History of a process at some time point, most-recent-first: lag 1 is the
// immediately preceding observation. Lags past effective_length() read as the
// zero vector (finitely-non-zero sequence convention). Two backings: an
// explicit window, or a slice of a Series (rows 0..t0-1, newest last) with an
// optional initial sequence u spliced in after the series runs out.
class History {
public:
    /// Explicit window, window[0] = lag 1.
    History(const std::vector<VectorXd>& window, int m)
        : window_(&window), m_(m), avail_(static_cast<long>(window.size())) {
        for (const auto& v : window)
            if (v.size() != m) throw ContractError("History: vector dimension != m");
    }

    /// Lags of X_{t} inside `series`: lag j reads row t-1-j. `t` is 1-based.
    History(const Series& series, long t, const std::vector<VectorXd>* u, long max_lags)
        : series_(&series.data), t_(t), u_(u), m_(series.m()) {
        long avail = (t - 1) + (u ? static_cast<long>(u->size()) : 0);
        avail_ = (max_lags >= 0 && max_lags < avail) ? max_lags : avail;
    }

    int dim() const { return m_; }
    long effective_length() const { return avail_; }

    /// m == 1 fast path.
    double scalar(long j) const {
        if (j > avail_) return 0.0;
        if (window_) return (*window_)[j - 1][0];
        long row = t_ - 1 - j;
        if (row >= 0) return (*series_)(row, 0);
        return (*u_)[static_cast<std::size_t>(-row - 1)][0];
    }

    VectorXd vec(long j) const {
        if (j > avail_) return VectorXd::Zero(m_);
        if (window_) return (*window_)[j - 1];
        long row = t_ - 1 - j;
        if (row >= 0) return series_->row(row).transpose();
        return (*u_)[static_cast<std::size_t>(-row - 1)];
    }

private:
    const std::vector<VectorXd>* window_ = nullptr;
    const MatrixXd* series_ = nullptr;
    long t_ = 0;
    const std::vector<VectorXd>* u_ = nullptr;
    int m_ = 0;
    long avail_ = 0;
};

/// Which Lipschitz coefficient family a sequence belongs to.
enum class Psi { F, M, H };

/// Declared decay of a coefficient sequence; drives tail bounds when summing.
struct DecayTag {
    enum Kind { Finite, Geometric, Polynomial } kind = Finite;
    long max_lag = 0;   // Finite: alpha_j = 0 for j > max_lag
    double rate = 0.0;  // Geometric: alpha_{j+1} <= rate * alpha_j eventually
    double ell = 0.0;   // Polynomial: alpha_j = O(j^-ell)

    static DecayTag finite(long k) { return {Finite, k, 0.0, 0.0}; }
    static DecayTag geometric(double r) { return {Geometric, 0, r, 0.0}; }
    static DecayTag polynomial(double l) { return {Polynomial, 0, 0.0, l}; }
};

}  // namespace qmle

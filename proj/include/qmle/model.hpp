#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qmle/innovations.hpp"
#include "qmle/types.hpp"

namespace qmle {

/// Which Lipschitz family the stationarity-region check uses for this model:
/// Route::M uses sum alpha(f) + (E||xi||^r)^{1/r} sum alpha(M); Route::H is
/// the scalar variance route E|xi|^r (sum alpha(H))^{r/2}.
enum class Route { M, H };

/// Packed storage index for a symmetric d x d set, i <= j.
inline int sym_index(int i, int j, int d) {
    if (i > j) std::swap(i, j);
    return i * d - i * (i - 1) / 2 + (j - i);
}
inline int sym_size(int d) { return d * (d + 1) / 2; }

struct EvalOptions {
    long max_lags = -1;                         // -1: model's suggested truncation
    const std::vector<VectorXd>* u = nullptr;   // initial sequence (zero if null)
    double det_floor = 1e-10;                   // A2 check on det H
};

/// Receives per-observation conditional mean/variance and their
/// theta-derivatives during a path scan. Pointers are null below the
/// requested derivative order.
class PathSink {
public:
    virtual ~PathSink() = default;
    virtual void emit(long t, const VectorXd& f_t, const MatrixXd& H_t,
                      const MatrixXd* df,                // m x d
                      const std::vector<MatrixXd>* dH,   // d matrices m x m
                      const std::vector<VectorXd>* d2f,  // sym-packed, m-vectors
                      const std::vector<MatrixXd>* d2H) = 0;  // sym-packed
};

// Abstract causal model X_t = M_theta(past) xi_t + f_theta(past).
// Immutable after construction; all evaluation is const and thread-safe.
class Model {
public:
    virtual ~Model() = default;

    int obs_dim() const { return m_; }
    int innov_dim() const { return p_; }
    int param_dim() const { return d_; }
    Route route() const { return route_; }
    bool zero_mean() const { return zero_mean_; }

    virtual std::string family() const = 0;

    /// Per-theta evaluation cache (expanded coefficient sequences etc.);
    /// `order` is the highest derivative order the cache must support.
    struct Ctx {
        VectorXd theta;
        virtual ~Ctx() = default;
    };
    virtual std::unique_ptr<const Ctx> make_ctx(const VectorXd& theta, int order = 0) const = 0;

    virtual void f(const Ctx&, const History&, VectorXd& out) const;
    virtual void H(const Ctx&, const History&, MatrixXd& out) const = 0;

    /// True when the model defines M directly (rather than H).
    virtual bool supplies_M() const { return false; }
    /// Default: lower Cholesky factor of H.
    virtual void M(const Ctx&, const History&, MatrixXd& out) const;

    /// True when f_grad/H_grad (and the hessians) are implemented in closed
    /// form; otherwise the scan falls back to central finite differences.
    virtual bool analytic_derivatives() const { return false; }
    virtual void f_grad(const Ctx&, const History&, MatrixXd& out) const;
    virtual void H_grad(const Ctx&, const History&, std::vector<MatrixXd>& out) const;
    virtual void f_hess(const Ctx&, const History&, std::vector<VectorXd>& out) const;
    virtual void H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const;

    /// Lipschitz coefficient alpha_j(Psi, theta); order 0, or the declared
    /// sequence for first/second theta-derivatives (orders 1, 2).
    virtual double alpha(Psi psi, int order, const VectorXd& theta, long j) const = 0;
    virtual DecayTag alpha_decay(Psi psi, int order, const VectorXd& theta) const = 0;

    /// Sum over j >= 1, absolute tail error below 1e-10. Families with closed
    /// forms override.
    virtual double alpha_sum(Psi psi, int order, const VectorXd& theta) const;
    /// Sum over j >= from.
    double alpha_tail(Psi psi, int order, const VectorXd& theta, long from) const;

    /// Truncation lag J where the declared tail drops below 1e-12, capped at 1e4.
    virtual long suggested_lag_truncation(const VectorXd& theta) const;

    /// Emits (f_t, H_t, derivatives up to `order`) for t = 1..n. The base
    /// implementation loops over truncated histories; recursive families
    /// override with O(n) recursions.
    virtual void scan_path(const VectorXd& theta, const Series& data, const EvalOptions& opts,
                           int order, PathSink& sink) const;

protected:
    Model(int m, int p, int d, Route route, bool zero_mean)
        : m_(m), p_(p), d_(d), route_(route), zero_mean_(zero_mean) {}

    int m_, p_, d_;
    Route route_;
    bool zero_mean_;
};

// --- model_core operations -------------------------------------------------

/// f_theta(history); validates bounds and dimensions.
VectorXd eval_f(const Model& model, const ParamVector& theta, const History& h);

/// H_theta(history), symmetrized on return; checks finiteness and the
/// det floor (A2).
MatrixXd eval_H(const Model& model, const ParamVector& theta, const History& h,
                double det_floor = 1e-10);

/// Weighted Lipschitz sum whose being < 1 defines membership in Theta(r)
/// (M route) or in the tilde region (H route, requires r >= 2 and m = p = 1).
double contraction_value(const Model& model, const VectorXd& theta,
                         const InnovationSpec& innov, double r);

bool in_theta_region(const Model& model, const VectorXd& theta,
                     const InnovationSpec& innov, double r);

/// Probabilistic full-rank check: smallest singular value of M at random
/// histories must exceed `tol`.
bool check_full_rank_M(const Model& model, const VectorXd& theta, int trials = 100,
                       std::uint64_t seed = 0xF00DULL, double tol = 1e-8);

}  // namespace qmle

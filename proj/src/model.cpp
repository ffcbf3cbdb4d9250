#include "qmle/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>

namespace qmle {

void Model::f(const Ctx&, const History&, VectorXd& out) const { out = VectorXd::Zero(m_); }

void Model::M(const Ctx& ctx, const History& h, MatrixXd& out) const {
    MatrixXd Hm;
    H(ctx, h, Hm);
    Eigen::LLT<MatrixXd> llt(Hm);
    if (llt.info() != Eigen::Success)
        throw A2ViolationError("M: conditional variance not positive definite");
    out = llt.matrixL();
}

namespace {
double fd_step(double theta_i, int order) {
    const double base = order >= 2 ? 1e-4 : 1e-6;
    return std::max(base, base * std::fabs(theta_i));
}
}  // namespace

// Finite-difference fallbacks. These rebuild contexts per call, so they are
// only meant for one-off history evaluations; scan_path caches the perturbed
// contexts across t.
void Model::f_grad(const Ctx& ctx, const History& h, MatrixXd& out) const {
    out.resize(m_, d_);
    VectorXd theta = ctx.theta, fp(m_), fm(m_);
    for (int i = 0; i < d_; ++i) {
        const double hstep = fd_step(theta[i], 1);
        VectorXd tp = theta, tm = theta;
        tp[i] += hstep;
        tm[i] -= hstep;
        f(*make_ctx(tp), h, fp);
        f(*make_ctx(tm), h, fm);
        out.col(i) = (fp - fm) / (2.0 * hstep);
    }
}

void Model::H_grad(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    out.assign(d_, MatrixXd(m_, m_));
    VectorXd theta = ctx.theta;
    MatrixXd Hp, Hm;
    for (int i = 0; i < d_; ++i) {
        const double hstep = fd_step(theta[i], 1);
        VectorXd tp = theta, tm = theta;
        tp[i] += hstep;
        tm[i] -= hstep;
        H(*make_ctx(tp), h, Hp);
        H(*make_ctx(tm), h, Hm);
        out[i] = (Hp - Hm) / (2.0 * hstep);
    }
}

void Model::f_hess(const Ctx& ctx, const History& h, std::vector<VectorXd>& out) const {
    out.assign(sym_size(d_), VectorXd(m_));
    VectorXd theta = ctx.theta;
    VectorXd a(m_), b(m_), c(m_), e(m_);
    for (int i = 0; i < d_; ++i) {
        const double hi = fd_step(theta[i], 2);
        for (int j = i; j < d_; ++j) {
            const double hj = fd_step(theta[j], 2);
            VectorXd t1 = theta, t2 = theta, t3 = theta, t4 = theta;
            t1[i] += hi; t1[j] += hj;
            t2[i] += hi; t2[j] -= hj;
            t3[i] -= hi; t3[j] += hj;
            t4[i] -= hi; t4[j] -= hj;
            f(*make_ctx(t1), h, a);
            f(*make_ctx(t2), h, b);
            f(*make_ctx(t3), h, c);
            f(*make_ctx(t4), h, e);
            out[sym_index(i, j, d_)] = (a - b - c + e) / (4.0 * hi * hj);
        }
    }
}

void Model::H_hess(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    out.assign(sym_size(d_), MatrixXd(m_, m_));
    VectorXd theta = ctx.theta;
    MatrixXd a, b, c, e;
    for (int i = 0; i < d_; ++i) {
        const double hi = fd_step(theta[i], 2);
        for (int j = i; j < d_; ++j) {
            const double hj = fd_step(theta[j], 2);
            VectorXd t1 = theta, t2 = theta, t3 = theta, t4 = theta;
            t1[i] += hi; t1[j] += hj;
            t2[i] += hi; t2[j] -= hj;
            t3[i] -= hi; t3[j] += hj;
            t4[i] -= hi; t4[j] -= hj;
            H(*make_ctx(t1), h, a);
            H(*make_ctx(t2), h, b);
            H(*make_ctx(t3), h, c);
            H(*make_ctx(t4), h, e);
            out[sym_index(i, j, d_)] = (a - b - c + e) / (4.0 * hi * hj);
        }
    }
}

double Model::alpha_sum(Psi psi, int order, const VectorXd& theta) const {
    const DecayTag tag = alpha_decay(psi, order, theta);
    constexpr double kTol = 1e-10;
    double sum = 0.0;
    switch (tag.kind) {
        case DecayTag::Finite:
            for (long j = 1; j <= tag.max_lag; ++j) sum += alpha(psi, order, theta, j);
            return sum;
        case DecayTag::Geometric: {
            if (!(tag.rate < 1.0))
                throw DivergenceError(family() + ": geometric decay rate >= 1");
            int quiet = 0;
            for (long j = 1; j <= 2'000'000; ++j) {
                const double a = alpha(psi, order, theta, j);
                if (a < 0) throw ContractError("alpha_j must be nonnegative");
                sum += a;
                const double tail = a * tag.rate / (1.0 - tag.rate);
                quiet = (tail < kTol) ? quiet + 1 : 0;
                if (quiet >= 3) return sum;
            }
            throw DivergenceError(family() + ": geometric alpha sum did not converge");
        }
        case DecayTag::Polynomial: {
            if (!(tag.ell > 1.0))
                throw DivergenceError(family() + ": polynomial decay needs ell > 1");
            // Direct sum plus a midpoint-rule integral tail; exact power laws
            // get absolute error well below 1e-10 at J = 20000.
            const long J = 20'000;
            double a = 0.0;
            for (long j = 1; j <= J; ++j) {
                a = alpha(psi, order, theta, j);
                if (a < 0) throw ContractError("alpha_j must be nonnegative");
                sum += a;
            }
            const double c = a * std::pow(static_cast<double>(J), tag.ell);
            sum += c * std::pow(J + 0.5, 1.0 - tag.ell) / (tag.ell - 1.0);
            return sum;
        }
    }
    throw ContractError("alpha_sum: bad decay tag");
}

double Model::alpha_tail(Psi psi, int order, const VectorXd& theta, long from) const {
    const DecayTag tag = alpha_decay(psi, order, theta);
    double sum = 0.0;
    switch (tag.kind) {
        case DecayTag::Finite:
            for (long j = from; j <= tag.max_lag; ++j) sum += alpha(psi, order, theta, j);
            return sum;
        case DecayTag::Geometric: {
            int quiet = 0;
            for (long j = from; j <= from + 2'000'000; ++j) {
                const double a = alpha(psi, order, theta, j);
                sum += a;
                const double tail = a * tag.rate / (1.0 - tag.rate);
                quiet = (tail < 1e-12) ? quiet + 1 : 0;
                if (quiet >= 3) return sum;
            }
            throw DivergenceError(family() + ": tail sum did not converge");
        }
        case DecayTag::Polynomial: {
            const long J = from + 20'000;
            double a = 0.0;
            for (long j = from; j <= J; ++j) {
                a = alpha(psi, order, theta, j);
                sum += a;
            }
            const double c = a * std::pow(static_cast<double>(J), tag.ell);
            sum += c * std::pow(J + 0.5, 1.0 - tag.ell) / (tag.ell - 1.0);
            return sum;
        }
    }
    throw ContractError("alpha_tail: bad decay tag");
}

long Model::suggested_lag_truncation(const VectorXd& theta) const {
    constexpr double kTailTol = 1e-12;
    constexpr long kCap = 10'000;
    const Psi psi = (route_ == Route::H) ? Psi::H : Psi::M;
    const DecayTag tag = alpha_decay(psi, 0, theta);
    long lag = 1;
    switch (tag.kind) {
        case DecayTag::Finite:
            lag = std::max<long>(tag.max_lag, 1);
            break;
        case DecayTag::Geometric: {
            int quiet = 0;
            for (long j = 1; j <= kCap; ++j) {
                lag = j;
                const double a = alpha(psi, 0, theta, j);
                const double tail = a * tag.rate / (1.0 - tag.rate);
                quiet = (tail < kTailTol) ? quiet + 1 : 0;
                if (quiet >= 3) break;
            }
            break;
        }
        case DecayTag::Polynomial:
            lag = kCap;
            break;
    }
    if (!zero_mean_) {
        const DecayTag ftag = alpha_decay(Psi::F, 0, theta);
        if (ftag.kind == DecayTag::Finite) lag = std::max(lag, ftag.max_lag);
        else lag = std::max(lag, (long)512);
    }
    return std::min(std::max<long>(lag, 1), kCap);
}

void Model::scan_path(const VectorXd& theta, const Series& data, const EvalOptions& opts,
                      int order, PathSink& sink) const {
    if (data.m() != m_) throw ContractError("scan_path: series dimension != m");
    const long n = data.n();
    const long max_lags = opts.max_lags >= 0 ? opts.max_lags : suggested_lag_truncation(theta);

    auto ctx = make_ctx(theta, analytic_derivatives() ? order : 0);
    const bool analytic = analytic_derivatives();

    // Perturbed contexts for the finite-difference fallback, built once.
    std::vector<std::unique_ptr<const Ctx>> cp, cm;     // order 1
    std::vector<std::unique_ptr<const Ctx>> cross;      // order 2, 4 per (i<=j) pair
    std::vector<double> h1(d_), h2(d_);
    if (!analytic && order >= 1) {
        cp.resize(d_);
        cm.resize(d_);
        for (int i = 0; i < d_; ++i) {
            h1[i] = fd_step(theta[i], 1);
            VectorXd tp = theta, tm = theta;
            tp[i] += h1[i];
            tm[i] -= h1[i];
            cp[i] = make_ctx(tp);
            cm[i] = make_ctx(tm);
        }
    }
    if (!analytic && order >= 2) {
        cross.resize(4 * sym_size(d_));
        for (int i = 0; i < d_; ++i) h2[i] = fd_step(theta[i], 2);
        for (int i = 0; i < d_; ++i)
            for (int j = i; j < d_; ++j) {
                VectorXd t1 = theta, t2 = theta, t3 = theta, t4 = theta;
                t1[i] += h2[i]; t1[j] += h2[j];
                t2[i] += h2[i]; t2[j] -= h2[j];
                t3[i] -= h2[i]; t3[j] += h2[j];
                t4[i] -= h2[i]; t4[j] -= h2[j];
                const int k = 4 * sym_index(i, j, d_);
                cross[k + 0] = make_ctx(t1);
                cross[k + 1] = make_ctx(t2);
                cross[k + 2] = make_ctx(t3);
                cross[k + 3] = make_ctx(t4);
            }
    }

    VectorXd ft(m_), tmpv(m_);
    MatrixXd Ht(m_, m_), tmpm(m_, m_), tmpm2(m_, m_);
    MatrixXd df;
    std::vector<MatrixXd> dH;
    std::vector<VectorXd> d2f;
    std::vector<MatrixXd> d2H;

    for (long t = 1; t <= n; ++t) {
        History h(data, t, opts.u, max_lags);
        if (zero_mean_) ft.setZero(m_);
        else f(*ctx, h, ft);
        H(*ctx, h, Ht);
        if (order >= 1) {
            if (analytic) {
                if (!zero_mean_) f_grad(*ctx, h, df);
                else df = MatrixXd::Zero(m_, d_);
                H_grad(*ctx, h, dH);
            } else {
                df.resize(m_, d_);
                dH.assign(d_, MatrixXd(m_, m_));
                for (int i = 0; i < d_; ++i) {
                    if (!zero_mean_) {
                        f(*cp[i], h, tmpv);
                        df.col(i) = tmpv;
                        f(*cm[i], h, tmpv);
                        df.col(i) = (df.col(i) - tmpv) / (2.0 * h1[i]);
                    } else {
                        df.col(i).setZero();
                    }
                    H(*cp[i], h, tmpm);
                    H(*cm[i], h, tmpm2);
                    dH[i] = (tmpm - tmpm2) / (2.0 * h1[i]);
                }
            }
        }
        if (order >= 2) {
            if (analytic) {
                if (!zero_mean_) f_hess(*ctx, h, d2f);
                else d2f.assign(sym_size(d_), VectorXd::Zero(m_));
                H_hess(*ctx, h, d2H);
            } else {
                d2f.assign(sym_size(d_), VectorXd::Zero(m_));
                d2H.assign(sym_size(d_), MatrixXd(m_, m_));
                MatrixXd a, b, c2, e;
                VectorXd av, bv, cv, ev;
                for (int i = 0; i < d_; ++i)
                    for (int j = i; j < d_; ++j) {
                        const int s = sym_index(i, j, d_);
                        const int k = 4 * s;
                        const double denom = 4.0 * h2[i] * h2[j];
                        H(*cross[k + 0], h, a);
                        H(*cross[k + 1], h, b);
                        H(*cross[k + 2], h, c2);
                        H(*cross[k + 3], h, e);
                        d2H[s] = (a - b - c2 + e) / denom;
                        if (!zero_mean_) {
                            f(*cross[k + 0], h, av);
                            f(*cross[k + 1], h, bv);
                            f(*cross[k + 2], h, cv);
                            f(*cross[k + 3], h, ev);
                            d2f[s] = (av - bv - cv + ev) / denom;
                        }
                    }
            }
        }
        sink.emit(t, ft, Ht, order >= 1 ? &df : nullptr, order >= 1 ? &dH : nullptr,
                  order >= 2 ? &d2f : nullptr, order >= 2 ? &d2H : nullptr);
    }
}

// --- free operations --------------------------------------------------------

VectorXd eval_f(const Model& model, const ParamVector& theta, const History& h) {
    theta.validate();
    if (theta.dim() != model.param_dim()) throw ContractError("eval_f: theta dimension");
    if (h.dim() != model.obs_dim()) throw ContractError("eval_f: history dimension != m");
    VectorXd out;
    model.f(*model.make_ctx(theta.values), h, out);
    return out;
}

MatrixXd eval_H(const Model& model, const ParamVector& theta, const History& h,
                double det_floor) {
    theta.validate();
    if (theta.dim() != model.param_dim()) throw ContractError("eval_H: theta dimension");
    if (h.dim() != model.obs_dim()) throw ContractError("eval_H: history dimension != m");
    MatrixXd out;
    model.H(*model.make_ctx(theta.values), h, out);
    if (!out.allFinite()) throw NumericError("eval_H: non-finite entries");
    out = 0.5 * (out + out.transpose()).eval();
    if (out.determinant() < det_floor)
        throw A2ViolationError("eval_H: det H below floor");
    return out;
}

double contraction_value(const Model& model, const VectorXd& theta,
                         const InnovationSpec& innov, double r) {
    if (!(r >= 1.0)) throw ContractError("contraction_value: r must be >= 1");
    if (model.route() == Route::H) {
        if (!(r >= 2.0)) throw ContractError("contraction_value: H route requires r >= 2");
        if (model.obs_dim() != 1 || model.innov_dim() != 1)
            throw ContractError("contraction_value: H route requires m = p = 1");
        const double s = model.alpha_sum(Psi::H, 0, theta);
        return innov.abs_moment(r) * std::pow(s, r / 2.0);
    }
    const double sf = model.zero_mean() ? 0.0 : model.alpha_sum(Psi::F, 0, theta);
    const double sm = model.alpha_sum(Psi::M, 0, theta);
    return sf + innov.norm_moment(model.innov_dim(), r) * sm;
}

bool in_theta_region(const Model& model, const VectorXd& theta,
                     const InnovationSpec& innov, double r) {
    return contraction_value(model, theta, innov, r) < 1.0;
}

bool check_full_rank_M(const Model& model, const VectorXd& theta, int trials,
                       std::uint64_t seed, double tol) {
    Rng rng(seed);
    auto ctx = model.make_ctx(theta);
    const int m = model.obs_dim();
    MatrixXd Mm;
    for (int trial = 0; trial < trials; ++trial) {
        const int lags = 1 + static_cast<int>(rng.next_u64() % 8);
        std::vector<VectorXd> window(lags);
        for (auto& v : window) {
            v.resize(m);
            for (int k = 0; k < m; ++k) v[k] = rng.next_gaussian();
        }
        History h(window, m);
        model.M(*ctx, h, Mm);
        Eigen::JacobiSVD<MatrixXd> svd(Mm);
        if (svd.singularValues().minCoeff() <= tol) return false;
    }
    return true;
}

}  // namespace qmle

#include <cmath>
#include <numeric>

#include "qmle/zoo/zoo.hpp"

namespace qmle {

namespace {

constexpr double kPosFloor = 1e-4;

ParamVector box_from(const VectorXd& theta, const VectorXd& lo, const VectorXd& hi) {
    return ParamVector(theta, lo, hi);
}

}  // namespace

// --- ArchInfModel ------------------------------------------------------------

namespace {
struct ArchCtx final : Model::Ctx {};
}  // namespace

ArchInfModel::ArchInfModel(int K)
    : Model(1, 1, 1 + K, Route::H, /*zero_mean=*/true), K_(K) {
    if (K < 0) throw ContractError("arch_inf: K must be >= 0");
}

ArchInfModel::ArchInfModel(double ell, long max_lag)
    : Model(1, 1, 2, Route::H, /*zero_mean=*/true), power_law_(true), ell_(ell), K_(max_lag) {
    if (!(ell > 1.0)) throw ContractError("arch_inf: power-law needs ell > 1 (sum b_j finite)");
    if (max_lag < 1) throw ContractError("arch_inf: power-law max_lag must be >= 1");
}

std::unique_ptr<const Model::Ctx> ArchInfModel::make_ctx(const VectorXd& theta, int) const {
    if (theta.size() != d_) throw ContractError("arch_inf: theta dimension");
    auto ctx = std::make_unique<ArchCtx>();
    ctx->theta = theta;
    return ctx;
}

double ArchInfModel::coeff(const VectorXd& theta, long j) const {
    if (j < 1 || j > K_) return 0.0;
    if (power_law_) return theta[1] * std::pow(static_cast<double>(j), -ell_);
    return theta[j];
}

void ArchInfModel::H(const Ctx& ctx, const History& h, MatrixXd& out) const {
    const VectorXd& th = ctx.theta;
    const long top = std::min<long>(K_, h.effective_length());
    double s = th[0];
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        s += coeff(th, j) * x * x;
    }
    out.resize(1, 1);
    out(0, 0) = s;
}

void ArchInfModel::H_grad(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    out.assign(d_, MatrixXd::Zero(1, 1));
    out[0](0, 0) = 1.0;
    const long top = std::min<long>(K_, h.effective_length());
    if (power_law_) {
        double s = 0.0;
        for (long j = 1; j <= top; ++j) {
            const double x = h.scalar(j);
            s += std::pow(static_cast<double>(j), -ell_) * x * x;
        }
        out[1](0, 0) = s;
    } else {
        for (long j = 1; j <= top; ++j) {
            const double x = h.scalar(j);
            out[j](0, 0) = x * x;
        }
    }
    (void)ctx;
}

void ArchInfModel::H_hess(const Ctx&, const History&, std::vector<MatrixXd>& out) const {
    out.assign(sym_size(d_), MatrixXd::Zero(1, 1));
}

double ArchInfModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::H || j < 1 || j > K_ || order > 1) return 0.0;
    if (power_law_) {
        const double pw = std::pow(static_cast<double>(j), -ell_);
        return order == 0 ? theta[1] * pw : pw;
    }
    return order == 0 ? theta[j] : 1.0;
}

DecayTag ArchInfModel::alpha_decay(Psi psi, int order, const VectorXd&) const {
    if (psi != Psi::H || order > 1) return DecayTag::finite(0);
    return power_law_ ? DecayTag::polynomial(ell_) : DecayTag::finite(K_);
}

BuiltModel make_arch_inf(const ArchInfCoeffs& c) {
    if (!(c.b0 > 0.0)) throw ContractError("make_arch_inf: b0 must be > 0");
    BuiltModel out;
    if (c.power_law) {
        if (c.scale < 0.0) throw ContractError("make_arch_inf: power-law scale must be >= 0");
        auto model = std::make_shared<ArchInfModel>(c.ell, 10'000L);
        VectorXd theta(2), lo(2), hi(2);
        theta << c.b0, c.scale;
        lo << kPosFloor, 0.0;
        hi << std::max(3.0 * c.b0, 1.0), std::max(3.0 * c.scale, 1.0);
        out.model = std::move(model);
        out.theta = box_from(theta, lo, hi);
        return out;
    }
    const int K = static_cast<int>(c.b.size());
    VectorXd theta(1 + K), lo(1 + K), hi(1 + K);
    theta[0] = c.b0;
    lo[0] = kPosFloor;
    hi[0] = std::max(3.0 * c.b0, 1.0);
    for (int j = 0; j < K; ++j) {
        if (c.b[j] < 0.0) throw ContractError("make_arch_inf: b_j must be >= 0");
        theta[1 + j] = c.b[j];
        lo[1 + j] = 0.0;
        hi[1 + j] = std::max(3.0 * c.b[j], 1.0);
    }
    out.model = std::make_shared<ArchInfModel>(K);
    out.theta = box_from(theta, lo, hi);
    return out;
}

// --- GarchModel --------------------------------------------------------------

namespace {

struct GarchCtx final : Model::Ctx {
    int order = 0;
    long J = 0;
    double b0 = 0.0;
    std::vector<double> b;  // b[j-1] = b_j
    VectorXd db0;           // d
    MatrixXd db;            // d x J
    VectorXd d2b0;          // sym(d)
    MatrixXd d2b;           // sym(d) x J
};

}  // namespace

GarchModel::GarchModel(int q, int qp)
    : Model(1, 1, 1 + q + qp, Route::H, /*zero_mean=*/true), q_(q), qp_(qp) {
    if (q < 0 || qp < 0 || q + qp < 1)
        throw ContractError("garch: need q, q' >= 0 with q + q' >= 1");
}

GarchCoeffs GarchModel::unpack(const VectorXd& theta) const {
    if (theta.size() != d_) throw ContractError("garch: theta dimension");
    GarchCoeffs g;
    g.c0 = theta[0];
    g.c.assign(theta.data() + 1, theta.data() + 1 + q_);
    g.d.assign(theta.data() + 1 + q_, theta.data() + 1 + q_ + qp_);
    return g;
}

std::unique_ptr<const Model::Ctx> GarchModel::make_ctx(const VectorXd& theta, int order) const {
    const GarchCoeffs g = unpack(theta);
    const double S = 1.0 - std::accumulate(g.d.begin(), g.d.end(), 0.0);
    if (S <= 0.0) throw DivergenceError("garch: sum d_j >= 1");

    auto ctx = std::make_unique<GarchCtx>();
    ctx->theta = theta;
    ctx->order = order;
    ctx->J = suggested_lag_truncation(theta);
    const long J = ctx->J;

    const ArchInfCoeffs arch = garch_to_arch_coeffs(g, J);
    ctx->b0 = arch.b0;
    ctx->b = arch.b;

    if (order >= 1) {
        ctx->db0 = VectorXd::Zero(d_);
        ctx->db0[0] = 1.0 / S;
        for (int a = 1; a <= qp_; ++a) ctx->db0[q_ + a] = g.c0 / (S * S);
        ctx->db = MatrixXd::Zero(d_, J);
        for (long j = 1; j <= J; ++j) {
            auto col = ctx->db.col(j - 1);
            if (j <= q_) col[static_cast<int>(j)] = 1.0;  // d b_j / d c_j
            for (int a = 1; a <= qp_; ++a)
                if (j - a >= 1) col[q_ + a] += ctx->b[j - a - 1];  // d b_j / d d_a
            for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k)
                col += g.d[k - 1] * ctx->db.col(j - k - 1);
        }
    }
    if (order >= 2) {
        ctx->d2b0 = VectorXd::Zero(sym_size(d_));
        for (int a = 1; a <= qp_; ++a) {
            ctx->d2b0[sym_index(0, q_ + a, d_)] = 1.0 / (S * S);
            for (int e = a; e <= qp_; ++e)
                ctx->d2b0[sym_index(q_ + a, q_ + e, d_)] = 2.0 * g.c0 / (S * S * S);
        }
        ctx->d2b = MatrixXd::Zero(sym_size(d_), J);
        for (long j = 1; j <= J; ++j) {
            auto col = ctx->d2b.col(j - 1);
            for (int a = 1; a <= qp_; ++a) {
                if (j - a < 1) continue;
                const auto prev = ctx->db.col(j - a - 1);
                // Off-diagonal slots (d_a, theta_i) collect one term from each
                // of the two mixed-derivative sums; the (d_a, d_a) diagonal
                // needs both, hence the extra add.
                for (int i = 0; i < d_; ++i) col[sym_index(q_ + a, i, d_)] += prev[i];
                col[sym_index(q_ + a, q_ + a, d_)] += prev[q_ + a];
            }
            for (int k = 1; k <= std::min<long>(j - 1, qp_); ++k)
                col += g.d[k - 1] * ctx->d2b.col(j - k - 1);
        }
    }
    return ctx;
}

void GarchModel::H(const Ctx& base, const History& h, MatrixXd& out) const {
    const auto& ctx = static_cast<const GarchCtx&>(base);
    const long top = std::min(ctx.J, h.effective_length());
    double s = ctx.b0;
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        s += ctx.b[j - 1] * x * x;
    }
    out.resize(1, 1);
    out(0, 0) = s;
}

void GarchModel::H_grad(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    const auto& ctx = static_cast<const GarchCtx&>(base);
    if (ctx.order < 1) throw ContractError("garch: ctx built without first derivatives");
    VectorXd g = ctx.db0;
    const long top = std::min(ctx.J, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        g += (x * x) * ctx.db.col(j - 1);
    }
    out.assign(d_, MatrixXd(1, 1));
    for (int i = 0; i < d_; ++i) out[i](0, 0) = g[i];
}

void GarchModel::H_hess(const Ctx& base, const History& h, std::vector<MatrixXd>& out) const {
    const auto& ctx = static_cast<const GarchCtx&>(base);
    if (ctx.order < 2) throw ContractError("garch: ctx built without second derivatives");
    VectorXd g = ctx.d2b0;
    const long top = std::min(ctx.J, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        g += (x * x) * ctx.d2b.col(j - 1);
    }
    out.assign(sym_size(d_), MatrixXd(1, 1));
    for (int s = 0; s < sym_size(d_); ++s) out[s](0, 0) = g[s];
}

double GarchModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::H || j < 1) return 0.0;
    const GarchCoeffs g = unpack(theta);
    if (order == 0) {
        // b_j by the expansion recursion up to j.
        std::vector<double> b(static_cast<std::size_t>(j), 0.0);
        for (long i = 1; i <= j; ++i) {
            double bi = (i <= q_) ? g.c[i - 1] : 0.0;
            for (int k = 1; k <= std::min<long>(i - 1, qp_); ++k) bi += g.d[k - 1] * b[i - k - 1];
            b[i - 1] = bi;
        }
        return b[j - 1];
    }
    // Derivative sequences: sup over theta coordinates of |d^order b_j|.
    auto ctx = make_ctx(theta, order);
    const auto& gc = static_cast<const GarchCtx&>(*ctx);
    if (j > gc.J) return 0.0;
    if (order == 1) return gc.db.col(j - 1).cwiseAbs().maxCoeff();
    return gc.d2b.col(j - 1).cwiseAbs().maxCoeff();
}

DecayTag GarchModel::alpha_decay(Psi psi, int, const VectorXd& theta) const {
    if (psi != Psi::H) return DecayTag::finite(0);
    const GarchCoeffs g = unpack(theta);
    const double rho = companion_spectral_radius(g.d);
    return (rho > 0) ? DecayTag::geometric(std::min(rho + 1e-12, 0.999999))
                     : DecayTag::finite(q_);
}

double GarchModel::alpha_sum(Psi psi, int order, const VectorXd& theta) const {
    if (psi == Psi::H && order == 0) {
        const GarchCoeffs g = unpack(theta);
        const double S = 1.0 - std::accumulate(g.d.begin(), g.d.end(), 0.0);
        if (S <= 0.0) throw DivergenceError("garch: sum d_j >= 1");
        return std::accumulate(g.c.begin(), g.c.end(), 0.0) / S;
    }
    return Model::alpha_sum(psi, order, theta);
}

void GarchModel::scan_path(const VectorXd& theta, const Series& data, const EvalOptions& opts,
                           int order, PathSink& sink) const {
    // O(n) native recursion; valid only for the default truncation with a
    // zero initial sequence (pre-sample variance pinned at its stationary
    // zero-history value b0, which is what the expanded evaluator converges
    // to as the truncation tail vanishes).
    const bool zero_u = (opts.u == nullptr) || opts.u->empty();
    if (data.m() != 1 || opts.max_lags >= 0 || !zero_u) {
        Model::scan_path(theta, data, opts, order, sink);
        return;
    }
    const GarchCoeffs g = unpack(theta);
    const double S = 1.0 - std::accumulate(g.d.begin(), g.d.end(), 0.0);
    if (S <= 0.0) throw DivergenceError("garch: sum d_j >= 1");
    const double b0 = g.c0 / S;
    const int d = d_, sym = sym_size(d_);
    const long n = data.n();

    VectorXd db0 = VectorXd::Zero(d), d2b0 = VectorXd::Zero(sym);
    if (order >= 1) {
        db0[0] = 1.0 / S;
        for (int a = 1; a <= qp_; ++a) db0[q_ + a] = g.c0 / (S * S);
    }
    if (order >= 2)
        for (int a = 1; a <= qp_; ++a) {
            d2b0[sym_index(0, q_ + a, d)] = 1.0 / (S * S);
            for (int e = a; e <= qp_; ++e)
                d2b0[sym_index(q_ + a, q_ + e, d)] = 2.0 * g.c0 / (S * S * S);
        }

    // Lag buffers, index k-1 holds the value at t-k; pre-sample values sit at
    // the zero-history fixed point.
    std::vector<double> sigl(qp_, b0);
    std::vector<VectorXd> dsigl(qp_, db0);
    std::vector<VectorXd> d2sigl(qp_, d2b0);

    const VectorXd f0 = VectorXd::Zero(1);
    const MatrixXd df0 = MatrixXd::Zero(1, d);
    std::vector<VectorXd> d2f0;
    if (order >= 2) d2f0.assign(sym, VectorXd::Zero(1));
    MatrixXd Ht(1, 1);
    std::vector<MatrixXd> dH(d, MatrixXd(1, 1));
    std::vector<MatrixXd> d2H(sym, MatrixXd(1, 1));
    VectorXd dsig(d), d2sig(sym);

    for (long t = 1; t <= n; ++t) {
        double sig = g.c0;
        for (int i = 1; i <= q_; ++i) {
            const long row = t - i - 1;
            if (row >= 0) {
                const double x = data.data(row, 0);
                sig += g.c[i - 1] * x * x;
            }
        }
        for (int k = 1; k <= qp_; ++k) sig += g.d[k - 1] * sigl[k - 1];

        if (order >= 1) {
            dsig.setZero();
            dsig[0] = 1.0;
            for (int i = 1; i <= q_; ++i) {
                const long row = t - i - 1;
                if (row >= 0) {
                    const double x = data.data(row, 0);
                    dsig[i] = x * x;
                }
            }
            for (int a = 1; a <= qp_; ++a) dsig[q_ + a] = sigl[a - 1];
            for (int k = 1; k <= qp_; ++k) dsig += g.d[k - 1] * dsigl[k - 1];
        }
        if (order >= 2) {
            d2sig.setZero();
            for (int a = 1; a <= qp_; ++a) {
                const VectorXd& prev = dsigl[a - 1];
                for (int i = 0; i < d; ++i) d2sig[sym_index(q_ + a, i, d)] += prev[i];
                d2sig[sym_index(q_ + a, q_ + a, d)] += prev[q_ + a];
            }
            for (int k = 1; k <= qp_; ++k) d2sig += g.d[k - 1] * d2sigl[k - 1];
        }

        Ht(0, 0) = sig;
        if (order >= 1)
            for (int i = 0; i < d; ++i) dH[i](0, 0) = dsig[i];
        if (order >= 2)
            for (int s = 0; s < sym; ++s) d2H[s](0, 0) = d2sig[s];
        sink.emit(t, f0, Ht, order >= 1 ? &df0 : nullptr, order >= 1 ? &dH : nullptr,
                  order >= 2 ? &d2f0 : nullptr, order >= 2 ? &d2H : nullptr);

        if (qp_ > 0) {
            for (int k = qp_ - 1; k >= 1; --k) {
                sigl[k] = sigl[k - 1];
                if (order >= 1) dsigl[k] = dsigl[k - 1];
                if (order >= 2) d2sigl[k] = d2sigl[k - 1];
            }
            sigl[0] = sig;
            if (order >= 1) dsigl[0] = dsig;
            if (order >= 2) d2sigl[0] = d2sig;
        }
    }
}

BuiltModel make_garch(const GarchCoeffs& c) {
    if (!(c.c0 > 0.0)) throw ContractError("make_garch: c0 must be > 0");
    for (double v : c.c)
        if (v < 0.0) throw ContractError("make_garch: c_i must be >= 0");
    for (double v : c.d)
        if (v < 0.0) throw ContractError("make_garch: d_j must be >= 0");
    if (std::accumulate(c.d.begin(), c.d.end(), 0.0) >= 1.0)
        throw ContractError("make_garch: sum d_j must be < 1");
    if (!garch_polynomials_coprime(c))
        throw ContractError("make_garch: lag polynomials must be coprime");

    const int q = static_cast<int>(c.c.size());
    const int qp = static_cast<int>(c.d.size());
    const int dd = 1 + q + qp;
    VectorXd theta(dd), lo(dd), hi(dd);
    theta[0] = c.c0;
    lo[0] = kPosFloor;
    hi[0] = std::max(3.0 * c.c0, 1.0);
    for (int i = 0; i < q; ++i) {
        theta[1 + i] = c.c[i];
        lo[1 + i] = 0.0;
        hi[1 + i] = 0.98;
    }
    for (int k = 0; k < qp; ++k) {
        theta[1 + q + k] = c.d[k];
        lo[1 + q + k] = 0.0;
        hi[1 + q + k] = 0.95 / qp;
    }
    BuiltModel out;
    out.model = std::make_shared<GarchModel>(q, qp);
    out.theta = box_from(theta, lo, hi);
    return out;
}

// --- TarchModel --------------------------------------------------------------

namespace {
struct TarchCtx final : Model::Ctx {};
}  // namespace

TarchModel::TarchModel(int K)
    : Model(1, 1, 1 + 2 * K, Route::M, /*zero_mean=*/true), K_(K) {
    if (K < 0) throw ContractError("tarch: K must be >= 0");
}

std::unique_ptr<const Model::Ctx> TarchModel::make_ctx(const VectorXd& theta, int) const {
    if (theta.size() != d_) throw ContractError("tarch: theta dimension");
    auto ctx = std::make_unique<TarchCtx>();
    ctx->theta = theta;
    return ctx;
}

double TarchModel::sigma(const VectorXd& th, const History& h) const {
    const long top = std::min<long>(K_, h.effective_length());
    double s = th[0];
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        s += th[j] * std::max(x, 0.0) - th[K_ + j] * std::min(x, 0.0);
    }
    return s;
}

void TarchModel::M(const Ctx& ctx, const History& h, MatrixXd& out) const {
    out.resize(1, 1);
    out(0, 0) = sigma(ctx.theta, h);
}

void TarchModel::H(const Ctx& ctx, const History& h, MatrixXd& out) const {
    const double s = sigma(ctx.theta, h);
    out.resize(1, 1);
    out(0, 0) = s * s;
}

void TarchModel::H_grad(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    const double s = sigma(ctx.theta, h);
    out.assign(d_, MatrixXd::Zero(1, 1));
    out[0](0, 0) = 2.0 * s;
    const long top = std::min<long>(K_, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        out[j](0, 0) = 2.0 * s * std::max(x, 0.0);
        out[K_ + j](0, 0) = -2.0 * s * std::min(x, 0.0);
    }
}

void TarchModel::H_hess(const Ctx& ctx, const History& h, std::vector<MatrixXd>& out) const {
    // sigma is linear in theta, so d2(sigma^2) = 2 dsigma_i dsigma_j.
    VectorXd ds = VectorXd::Zero(d_);
    ds[0] = 1.0;
    const long top = std::min<long>(K_, h.effective_length());
    for (long j = 1; j <= top; ++j) {
        const double x = h.scalar(j);
        ds[j] = std::max(x, 0.0);
        ds[K_ + j] = -std::min(x, 0.0);
    }
    out.assign(sym_size(d_), MatrixXd(1, 1));
    for (int i = 0; i < d_; ++i)
        for (int j = i; j < d_; ++j) out[sym_index(i, j, d_)](0, 0) = 2.0 * ds[i] * ds[j];
    (void)ctx;
}

double TarchModel::alpha(Psi psi, int order, const VectorXd& theta, long j) const {
    if (psi != Psi::M || j < 1 || j > K_ || order > 1) return 0.0;
    if (order == 0) return std::max(theta[j], theta[K_ + j]);
    return 1.0;  // each coefficient enters with a 1-Lipschitz kink map
}

DecayTag TarchModel::alpha_decay(Psi psi, int order, const VectorXd&) const {
    if (psi != Psi::M || order > 1) return DecayTag::finite(0);
    return DecayTag::finite(K_);
}

BuiltModel make_tarch(const TarchCoeffs& c) {
    if (!(c.b0 > 0.0)) throw ContractError("make_tarch: b0 must be > 0");
    if (c.b_plus.size() != c.b_minus.size())
        throw ContractError("make_tarch: b_plus/b_minus length mismatch");
    const int K = static_cast<int>(c.b_plus.size());
    VectorXd theta(1 + 2 * K), lo(1 + 2 * K), hi(1 + 2 * K);
    theta[0] = c.b0;
    lo[0] = kPosFloor;
    hi[0] = std::max(3.0 * c.b0, 1.0);
    for (int j = 0; j < K; ++j) {
        if (c.b_plus[j] < 0.0 || c.b_minus[j] < 0.0)
            throw ContractError("make_tarch: b_j^+/- must be >= 0");
        theta[1 + j] = c.b_plus[j];
        theta[1 + K + j] = c.b_minus[j];
        lo[1 + j] = lo[1 + K + j] = 0.0;
        hi[1 + j] = std::max(3.0 * c.b_plus[j], 1.0);
        hi[1 + K + j] = std::max(3.0 * c.b_minus[j], 1.0);
    }
    BuiltModel out;
    out.model = std::make_shared<TarchModel>(K);
    out.theta = box_from(theta, lo, hi);
    return out;
}

}  // namespace qmle

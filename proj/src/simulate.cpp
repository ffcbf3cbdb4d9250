#include "qmle/simulate.hpp"

#include <cmath>
#include <string>

namespace qmle {

MatrixXd draw_innovations(const InnovationSpec& innov, int p, long count, std::uint64_t seed) {
    if (p < 1 || count < 1) throw ContractError("draw_innovations: p and count must be >= 1");
    Rng rng(seed);
    MatrixXd out(count, p);
    VectorXd xi(p);
    for (long t = 0; t < count; ++t) {
        innov.draw(rng, p, xi);
        out.row(t) = xi.transpose();
    }
    return out;
}

Series simulate_path(const Model& model, const ParamVector& theta, const InnovationSpec& innov,
                     const SimConfig& cfg) {
    theta.validate();
    if (theta.dim() != model.param_dim()) throw ContractError("simulate_path: theta dimension");
    if (cfg.n < 1) throw ContractError("simulate_path: n must be >= 1");

    const long lag_trunc =
        cfg.lag_truncation >= 0 ? cfg.lag_truncation : model.suggested_lag_truncation(theta.values);
    const long burn = cfg.burn_in >= 0 ? cfg.burn_in : 2 * lag_trunc;
    if (burn < lag_trunc)
        throw ContractError("simulate_path: burn_in must be >= lag_truncation");

    if (!cfg.override_region_check && !in_theta_region(model, theta.values, innov, 2.0))
        throw RegionError("simulate_path: theta outside the r = 2 stationarity region");

    const int m = model.obs_dim(), p = model.innov_dim();
    auto ctx = model.make_ctx(theta.values, 0);
    Rng rng(cfg.seed);
    const long total = burn + cfg.n;
    Series path(MatrixXd::Zero(total, m));

    VectorXd xi(p), ft(m), x(m);
    MatrixXd Mt(m, p);
    constexpr double kExplosion = 1e8;
    for (long t = 1; t <= total; ++t) {
        History h(path, t, nullptr, lag_trunc);
        innov.draw(rng, p, xi);
        if (model.zero_mean()) ft.setZero(m);
        else model.f(*ctx, h, ft);
        model.M(*ctx, h, Mt);
        x.noalias() = Mt * xi;
        x += ft;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kExplosion)
            throw DivergenceError("simulate_path: path explosion at step " + std::to_string(t));
        path.data.row(t - 1) = x.transpose();
    }
    return Series(path.data.bottomRows(cfg.n));
}

}  // namespace qmle

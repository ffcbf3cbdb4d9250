#include "qmle/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qmle/rng.hpp"

namespace qmle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd clip_to_box(VectorXd x, const ParamVector& box) {
    for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
    return x;
}

struct Objective {
    const Model& model;
    const Series& data;
    const FitOptions& opts;
    long evals = 0;

    // phi = -L_n / n; evaluation errors become +inf (rejected points).
    double value(const VectorXd& theta) {
        ++evals;
        try {
            return -quasi_loglik(model, theta, data, opts.lik) / static_cast<double>(data.n());
        } catch (const NumericError&) {
            return kInf;
        }
    }

    bool grad(const VectorXd& theta, double& val, VectorXd& g) {
        ++evals;
        try {
            const LikSummary s = evaluate_likelihood(model, theta, data, 1, opts.lik);
            val = -s.loglik / static_cast<double>(s.n);
            g = -s.score / static_cast<double>(s.n);
            return true;
        } catch (const NumericError&) {
            return false;
        }
    }
};

struct StartResult {
    VectorXd x;
    double phi = kInf;
    long iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    bool any_valid = false;
};

// Gradient with outward components at active bounds removed.
VectorXd projected_grad(const VectorXd& x, const VectorXd& g, const ParamVector& box) {
    VectorXd pg = g;
    constexpr double kEdge = 1e-12;
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] <= box.lo[i] + kEdge && g[i] > 0) pg[i] = 0.0;
        if (x[i] >= box.hi[i] - kEdge && g[i] < 0) pg[i] = 0.0;
    }
    return pg;
}

StartResult bfgs_projected(Objective& obj, const ParamVector& box, const VectorXd& x0,
                           const FitOptions& opts) {
    const int d = static_cast<int>(x0.size());
    StartResult res;
    VectorXd x = clip_to_box(x0, box);
    double fx;
    VectorXd g(d);
    if (!obj.grad(x, fx, g)) return res;  // invalid start
    res.any_valid = true;

    MatrixXd B = MatrixXd::Identity(d, d);  // inverse-Hessian approximation
    for (long it = 1; it <= opts.max_iter; ++it) {
        res.iterations = it;
        const VectorXd pg = projected_grad(x, g, box);
        const double tol = opts.grad_tol_scale * (1.0 + std::fabs(fx));
        if (pg.norm() < tol) {
            res.converged = true;
            break;
        }
        VectorXd dir = -(B * pg);
        if (dir.dot(pg) > -1e-14 * dir.norm() * pg.norm()) {
            B.setIdentity();
            dir = -pg;
        }
        // Backtracking Armijo search along the projected path.
        double alpha = 1.0, fnew = kInf;
        VectorXd xnew;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xnew = clip_to_box(x + alpha * dir, box);
            const VectorXd step = xnew - x;
            if (step.norm() < 1e-18) break;
            fnew = obj.value(xnew);
            if (fnew <= fx + 1e-4 * g.dot(step)) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.converged = true;  // no admissible descent: stationary on the box
            break;
        }
        VectorXd gnew(d);
        double fcheck;
        if (!obj.grad(xnew, fcheck, gnew)) break;
        const VectorXd s = xnew - x, y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const VectorXd By = B * y;
            const double yBy = y.dot(By);
            B += ((sy + yBy) / (sy * sy)) * (s * s.transpose()) -
                 (By * s.transpose() + s * By.transpose()) / sy;
        }
        const bool small_step = s.norm() < opts.step_tol * (1.0 + x.norm());
        x = xnew;
        fx = fnew;
        g = gnew;
        if (small_step) {
            res.converged = true;
            break;
        }
    }
    res.x = x;
    res.phi = fx;
    res.grad_norm = projected_grad(x, g, box).norm();
    return res;
}

StartResult nelder_mead(Objective& obj, const ParamVector& box, const VectorXd& x0,
                        const FitOptions& opts) {
    const int d = static_cast<int>(x0.size());
    StartResult res;
    std::vector<VectorXd> xs(d + 1);
    std::vector<double> fs(d + 1);
    xs[0] = clip_to_box(x0, box);
    for (int i = 0; i < d; ++i) {
        VectorXd v = xs[0];
        const double delta = 0.05 * (box.hi[i] - box.lo[i]);
        v[i] = (v[i] + delta <= box.hi[i]) ? v[i] + delta : v[i] - delta;
        xs[i + 1] = v;
    }
    for (int i = 0; i <= d; ++i) {
        fs[i] = obj.value(xs[i]);
        if (std::isfinite(fs[i])) res.any_valid = true;
    }
    if (!res.any_valid) return res;

    auto order = [&] {
        std::vector<int> idx(d + 1);
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<VectorXd> xs2(d + 1);
        std::vector<double> fs2(d + 1);
        for (int i = 0; i <= d; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };
    order();

    const long max_iter = opts.max_iter * std::max(1, d);
    for (long it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        double spread = 0.0, size = 0.0;
        for (int i = 1; i <= d; ++i) {
            if (std::isfinite(fs[i])) spread = std::max(spread, fs[i] - fs[0]);
            size = std::max(size, (xs[i] - xs[0]).norm());
        }
        if (spread < 1e-10 * (1.0 + std::fabs(fs[0])) && size < opts.step_tol * (1.0 + xs[0].norm())) {
            res.converged = true;
            break;
        }
        VectorXd centroid = VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += xs[i];
        centroid /= d;

        const VectorXd xr = clip_to_box(centroid + (centroid - xs[d]), box);
        const double fr = obj.value(xr);
        if (fr < fs[0]) {
            const VectorXd xe = clip_to_box(centroid + 2.0 * (centroid - xs[d]), box);
            const double fe = obj.value(xe);
            if (fe < fr) {
                xs[d] = xe;
                fs[d] = fe;
            } else {
                xs[d] = xr;
                fs[d] = fr;
            }
        } else if (fr < fs[d - 1]) {
            xs[d] = xr;
            fs[d] = fr;
        } else {
            const VectorXd xc = clip_to_box(centroid + 0.5 * (xs[d] - centroid), box);
            const double fc = obj.value(xc);
            if (fc < std::min(fr, fs[d])) {
                xs[d] = xc;
                fs[d] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    xs[i] = clip_to_box(xs[0] + 0.5 * (xs[i] - xs[0]), box);
                    fs[i] = obj.value(xs[i]);
                }
            }
        }
        order();
    }
    res.x = xs[0];
    res.phi = fs[0];
    return res;
}

}  // namespace

FitResult fit(const Model& model, const Series& data, const ParamVector& box,
              const FitOptions& opts) {
    box.validate();
    if (!data.all_finite()) throw ContractError("fit: data must be finite");
    if (box.dim() != model.param_dim()) throw ContractError("fit: box dimension");
    if (opts.starts < 1) throw ContractError("fit: starts must be >= 1");

    const int d = box.dim();
    Objective obj{model, data, opts};
    const bool use_bfgs =
        opts.algo == FitOptions::Algo::BfgsProjected ||
        (opts.algo == FitOptions::Algo::Auto && model.analytic_derivatives());

    std::vector<VectorXd> starts;
    starts.push_back(box.values);
    const VectorXd center = box.center();
    if ((center - box.values).norm() > 1e-14) starts.push_back(center);
    Rng rng(Rng::derive(opts.seed, 0x57A7));
    while (static_cast<int>(starts.size()) < opts.starts) {
        VectorXd x(d);
        for (int i = 0; i < d; ++i)
            x[i] = box.lo[i] + rng.next_uniform() * (box.hi[i] - box.lo[i]);
        starts.push_back(x);
    }
    starts.resize(opts.starts);

    FitResult best;
    double best_phi = kInf;
    int failed = 0;
    for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
        StartResult r = use_bfgs ? bfgs_projected(obj, box, starts[s], opts)
                                 : nelder_mead(obj, box, starts[s], opts);
        if (!r.any_valid || !std::isfinite(r.phi)) {
            ++failed;
            continue;
        }
        // Highest objective wins; near-ties go to the lowest start index.
        if (r.phi < best_phi - 1e-10) {
            best_phi = r.phi;
            best.theta_hat = ParamVector(r.x, box.lo, box.hi);
            best.objective = -r.phi * static_cast<double>(data.n());
            best.iterations = r.iterations;
            best.converged = r.converged;
            best.grad_norm = r.grad_norm;
            best.best_start = s;
        }
    }
    best.failed_starts = failed;
    if (best.best_start < 0)
        throw UnfittableError("fit: every start failed to produce a valid objective value");
    return best;
}

}  // namespace qmle

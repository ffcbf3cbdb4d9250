#include "qmle/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "qmle/stats.hpp"

namespace qmle {

void parallel_for(long count, const std::function<void(long)>& fn) {
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QMLE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) threads = v;
    }
    threads = std::max(1, threads);
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(count, 1)));
    if (threads <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

namespace {

void validate_plan(const ExperimentPlan& plan, double r_required) {
    if (!plan.model) throw ContractError("harness: plan has no model");
    if (plan.replications < 1) throw ContractError("harness: R must be >= 1");
    if (plan.n_grid.empty()) throw ContractError("harness: empty n grid");
    for (std::size_t i = 1; i < plan.n_grid.size(); ++i)
        if (plan.n_grid[i] <= plan.n_grid[i - 1])
            throw ContractError("harness: n grid must be increasing");
    plan.theta0.validate();
    if (!in_theta_region(*plan.model, plan.theta0.values, plan.innov, r_required))
        throw RegionError("harness: theta0 outside the r = " + std::to_string(r_required) +
                          " stationarity region");
}

// One simulate + fit replication; fills the record instead of throwing.
void run_one(const ExperimentPlan& plan, long n, int rep, std::uint64_t seed, bool want_sigma,
             McRecord& rec) {
    rec.n = n;
    rec.rep = rep;
    rec.seed = seed;
    try {
        SimConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        const Series path = simulate_path(*plan.model, plan.theta0, plan.innov, cfg);
        FitOptions fopts = plan.fit_options;
        fopts.seed = Rng::derive(seed, 0xF17);
        const FitResult fr = fit(*plan.model, path, plan.theta0, fopts);
        rec.theta_hat = fr.theta_hat.values;
        rec.converged = fr.converged;
        if (want_sigma) {
            const MatrixXd F =
                estimate_F(*plan.model, rec.theta_hat, path, FMethod::HessianAvg);
            const MatrixXd G =
                estimate_G(*plan.model, rec.theta_hat, path, GMethod::ScoreOuter);
            // Packed full matrix: diagonal first, then strict lower triangle.
            const SandwichCov cov = sandwich(F, G, n);
            const int d = static_cast<int>(rec.theta_hat.size());
            VectorXd packed(d + d * (d - 1) / 2);
            packed.head(d) = cov.sigma.diagonal();
            int k = d;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < i; ++j) packed[k++] = cov.sigma(i, j);
            rec.sigma_diag = packed;
        }
    } catch (const std::exception& ex) {
        rec.error = ex.what();
    }
}

MatrixXd unpack_sigma(const VectorXd& packed, int d) {
    MatrixXd S(d, d);
    S.diagonal() = packed.head(d);
    int k = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) S(i, j) = S(j, i) = packed[k++];
    return S;
}

void finalize_failures(const ExperimentPlan& plan, McReport& rep, const char* what) {
    for (const auto& r : rep.records)
        if (!r.error.empty()) ++rep.failures;
    rep.failure_rate = static_cast<double>(rep.failures) /
                       static_cast<double>(rep.records.size());
    if (rep.failure_rate > plan.max_failure_rate)
        throw NumericError(std::string(what) + ": failure rate " +
                           std::to_string(rep.failure_rate) + " exceeds limit");
    if (rep.failure_rate > 0.05) rep.note = "more than 5% of replications excluded";
}

}  // namespace

McReport run_consistency(const ExperimentPlan& plan) {
    validate_plan(plan, 2.0);
    const int R = plan.replications;
    const long G = static_cast<long>(plan.n_grid.size());
    McReport report;
    report.n_grid = plan.n_grid;
    report.records.resize(G * R);

    parallel_for(G * R, [&](long idx) {
        const long gi = idx / R;
        const int rep = static_cast<int>(idx % R);
        const std::uint64_t seed = Rng::derive(plan.base_seed, idx);
        run_one(plan, plan.n_grid[gi], rep, seed, /*want_sigma=*/false,
                report.records[idx]);
    });
    finalize_failures(plan, report, "run_consistency");

    const int d = plan.theta0.dim();
    std::vector<double> lx, ly;
    for (long gi = 0; gi < G; ++gi) {
        std::vector<double> errs;
        VectorXd bias = VectorXd::Zero(d), mse = VectorXd::Zero(d);
        long ok = 0;
        for (int rep = 0; rep < R; ++rep) {
            const McRecord& rec = report.records[gi * R + rep];
            if (!rec.error.empty()) continue;
            const VectorXd diff = rec.theta_hat - plan.theta0.values;
            errs.push_back(diff.norm());
            bias += diff;
            mse += diff.cwiseAbs2();
            ++ok;
        }
        if (errs.empty()) throw NumericError("run_consistency: all replications failed at one n");
        report.median_error.push_back(median_of(errs));
        report.bias.push_back(bias / static_cast<double>(ok));
        report.rmse.push_back((mse / static_cast<double>(ok)).cwiseSqrt());
        lx.push_back(std::log(static_cast<double>(plan.n_grid[gi])));
        ly.push_back(std::log(report.median_error.back()));
    }
    if (lx.size() >= 2) report.loglog_slope = lsq_slope(lx, ly);
    else report.note = "single n: no rate slope";
    return report;
}

McReport run_normality(const ExperimentPlan& plan) {
    validate_plan(plan, 4.0);
    const int R = plan.replications;
    const long n = plan.n_grid.back();
    McReport report;
    report.n_grid = {n};
    report.records.resize(R);

    parallel_for(R, [&](long idx) {
        const std::uint64_t seed = Rng::derive(plan.base_seed, idx);
        run_one(plan, n, static_cast<int>(idx), seed, /*want_sigma=*/true,
                report.records[idx]);
    });
    finalize_failures(plan, report, "run_normality");

    const int d = plan.theta0.dim();
    const double sn = std::sqrt(static_cast<double>(n));
    std::vector<std::vector<double>> z(d);
    std::vector<long> cov_hits90(d, 0), cov_hits95(d, 0), cov_hits99(d, 0);
    MatrixXd emp = MatrixXd::Zero(d, d);
    MatrixXd mean_sigma = MatrixXd::Zero(d, d);
    long ok = 0;
    const double z90 = Rng::normal_quantile(0.95);
    const double z95 = Rng::normal_quantile(0.975);
    const double z99 = Rng::normal_quantile(0.995);
    for (const auto& rec : report.records) {
        if (!rec.error.empty()) continue;
        const MatrixXd sigma = unpack_sigma(rec.sigma_diag, d);
        const VectorXd diff = rec.theta_hat - plan.theta0.values;
        const VectorXd zs = sn * (inv_sqrt_psd(sigma) * diff);
        for (int i = 0; i < d; ++i) {
            z[i].push_back(zs[i]);
            const double se = std::sqrt(std::max(sigma(i, i), 0.0)) / sn;
            const double adev = std::fabs(diff[i]);
            if (adev <= z90 * se) ++cov_hits90[i];
            if (adev <= z95 * se) ++cov_hits95[i];
            if (adev <= z99 * se) ++cov_hits99[i];
        }
        emp += (sn * diff) * (sn * diff).transpose();
        mean_sigma += sigma;
        ++ok;
    }
    if (ok < 2) {
        report.note = "fewer than 2 successful replications: aggregates skipped";
        return report;
    }
    report.empirical_cov = emp / static_cast<double>(ok);
    report.mean_sigma = mean_sigma / static_cast<double>(ok);
    {
        Eigen::JacobiSVD<MatrixXd> num(report.mean_sigma - report.empirical_cov);
        Eigen::JacobiSVD<MatrixXd> den(report.empirical_cov);
        report.sigma_rel_err = num.singularValues()[0] / den.singularValues()[0];
    }
    if (ok < 5) {
        report.note = "fewer than 5 successful replications: KS skipped";
        return report;
    }
    for (int i = 0; i < d; ++i) {
        const double dstat = ks_statistic(z[i]);
        report.ks_stat.push_back(dstat);
        report.ks_p.push_back(ks_pvalue(dstat, ok));
        report.coverage90.push_back(cov_hits90[i] / static_cast<double>(ok));
        report.coverage95.push_back(cov_hits95[i] / static_cast<double>(ok));
        report.coverage99.push_back(cov_hits99[i] / static_cast<double>(ok));
    }
    return report;
}

std::vector<SweepRow> run_region_sweep(const Model& model,
                                       const std::function<VectorXd(double)>& path,
                                       const InnovationSpec& innov,
                                       const std::vector<double>& r_grid, double s_lo,
                                       double s_hi) {
    if (!(s_lo < s_hi)) throw ContractError("run_region_sweep: need s_lo < s_hi");
    std::vector<SweepRow> table;
    for (double r : r_grid) {
        SweepRow row;
        row.r = r;
        auto value = [&](double s) { return contraction_value(model, path(s), innov, r); };
        row.value_lo = value(s_lo);
        row.value_hi = value(s_hi);
        const bool lo_in = row.value_lo < 1.0, hi_in = row.value_hi < 1.0;
        if (lo_in == hi_in) {
            row.crossed = false;
        } else {
            double a = s_lo, b = s_hi;
            while (b - a > 1e-6) {
                const double mid = 0.5 * (a + b);
                if ((value(mid) < 1.0) == lo_in) a = mid;
                else b = mid;
            }
            row.crossed = true;
            row.s_star = 0.5 * (a + b);
        }
        table.push_back(row);
    }
    return table;
}

}  // namespace qmle

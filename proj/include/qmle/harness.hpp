#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmle/asymptotics.hpp"
#include "qmle/fit.hpp"
#include "qmle/simulate.hpp"

namespace qmle {

struct ExperimentPlan {
    std::shared_ptr<const Model> model;
    ParamVector theta0;
    InnovationSpec innov;
    std::vector<long> n_grid;  // increasing
    int replications = 1;
    std::uint64_t base_seed = 1;
    FitOptions fit_options;
    double max_failure_rate = 0.20;  // experiment-level error above this
};

struct McRecord {
    long n = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    VectorXd theta_hat;
    bool converged = false;
    VectorXd sigma_diag;  // packed sandwich: diagonal, then strict lower triangle
    std::string error;    // empty on success
};

struct McReport {
    std::vector<McRecord> records;
    long failures = 0;
    double failure_rate = 0.0;
    std::string note;

    // Consistency aggregates: per n-grid entry.
    std::vector<long> n_grid;
    std::vector<double> median_error;  // median ||theta_hat - theta0||
    double loglog_slope = 0.0;
    std::vector<VectorXd> bias;  // per n, per coordinate
    std::vector<VectorXd> rmse;

    // Normality aggregates (single n): per coordinate.
    std::vector<double> ks_stat;
    std::vector<double> ks_p;
    std::vector<double> coverage90, coverage95, coverage99;
    MatrixXd empirical_cov;  // of sqrt(n) (theta_hat - theta0)
    MatrixXd mean_sigma;     // average sandwich estimate
    double sigma_rel_err = 0.0;  // spectral-norm relative gap
};

/// R fits per grid point; reports the median error per n and the fitted
/// log-log rate slope. Requires theta0 inside the r = 2 region.
McReport run_consistency(const ExperimentPlan& plan);

/// Fixed n (the last grid entry), R replications; KS tests of the
/// standardized estimates against N(0,1) and interval coverage. Requires
/// theta0 inside the r = 4 region.
McReport run_normality(const ExperimentPlan& plan);

struct SweepRow {
    double r = 0.0;
    bool crossed = false;
    double s_star = 0.0;  // boundary location (bisection to 1e-6)
    double value_lo = 0.0, value_hi = 0.0;
};

/// Contraction values along a one-parameter coefficient path s -> theta(s)
/// on [s_lo, s_hi], locating the contraction_value = 1 crossing per r.
std::vector<SweepRow> run_region_sweep(const Model& model,
                                       const std::function<VectorXd(double)>& path,
                                       const InnovationSpec& innov,
                                       const std::vector<double>& r_grid, double s_lo,
                                       double s_hi);

/// Runs fn(0..count-1) on a pool sized by QMLE_THREADS (default: hardware
/// concurrency). Exceptions inside fn must be handled by fn itself.
void parallel_for(long count, const std::function<void(long)>& fn);

}  // namespace qmle

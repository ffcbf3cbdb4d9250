#pragma once

#include <vector>

#include "qmle/types.hpp"

namespace qmle {

double normal_cdf(double x);

/// Kolmogorov-Smirnov statistic of `sample` against the standard normal.
double ks_statistic(std::vector<double> sample);

/// Asymptotic KS p-value with the finite-sample size correction
/// lambda = D (sqrt(n) + 0.12 + 0.11 / sqrt(n)).
double ks_pvalue(double d_stat, long n);

double mean_of(const std::vector<double>& v);
double variance_of(const std::vector<double>& v);  // unbiased
double median_of(std::vector<double> v);

/// Least-squares slope of y against x.
double lsq_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Symmetric inverse square root with an eigenvalue floor.
MatrixXd inv_sqrt_psd(const MatrixXd& A, double floor = 1e-12);

}  // namespace qmle

#include "qmle/stats.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qmle {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> sample) {
    if (sample.empty()) throw ContractError("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = normal_cdf(sample[i]);
        d = std::max(d, std::fabs((i + 1) / n - F));
        d = std::max(d, std::fabs(F - i / n));
    }
    return d;
}

double ks_pvalue(double d_stat, long n) {
    if (n < 1) throw ContractError("ks_pvalue: n must be >= 1");
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = d_stat * (sn + 0.12 + 0.11 / sn);
    if (lambda < 1e-3) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw ContractError("mean_of: empty");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) throw ContractError("variance_of: need at least 2 values");
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw ContractError("median_of: empty");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (hi + v[mid - 1]);
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("lsq_slope: need matching vectors of length >= 2");
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ContractError("lsq_slope: degenerate x");
    return sxy / sxx;
}

MatrixXd inv_sqrt_psd(const MatrixXd& A, double floor) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()));
    VectorXd ev = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace qmle

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace polymer {

// Small statistics toolbox backing the estimators: moments, quantiles,
// least squares, distribution-free test statistics and a few special
// functions. Everything operates on plain vectors of doubles.

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs); // unbiased, needs >= 2 samples
double stddev(const std::vector<double>& xs);

// Linear-interpolation quantile (type 7); p in [0,1]. Sorts a copy.
double quantile(std::vector<double> xs, double p);
double median(std::vector<double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    size_t points = 0;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Standard normal CDF and its inverse (Acklam's rational approximation
// polished by one Halley step; |error| < 1e-12 over (0,1)).
double normal_cdf(double z);
double normal_quantile(double p);

// One-sample Kolmogorov-Smirnov distance against the standard normal.
double ks_distance_normal(std::vector<double> sample);
// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);
// Asymptotic KS critical values at the 1% level (coefficient 1.63).
double ks_critical_one_sample_1pct(size_t n);
double ks_critical_two_sample_1pct(size_t n, size_t m);

// Anderson-Darling A^2 against the standard normal.
double anderson_darling_normal(std::vector<double> sample);

// Regularized lower incomplete gamma P(a, x) and the chi-square quantile
// solved from it by bisection.
double regularized_gamma_p(double a, double x);
double chi_square_quantile(double p, double dof);

struct WilsonInterval {
    double lo = 0.0;
    double hi = 0.0;
};
WilsonInterval wilson_interval(size_t successes, size_t trials, double z = 1.959963984540054);

// Delete-1 jackknife standard error of the sample variance.
double jackknife_variance_se(const std::vector<double>& xs);

} // namespace polymer

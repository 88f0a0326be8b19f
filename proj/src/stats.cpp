#include "polymer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polymer {

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs)
        s += x;
    return s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
    if (xs.size() < 2)
        throw std::invalid_argument("variance: need at least two samples");
    // A constant sample has variance exactly 0; the naive sum would leave
    // roundoff dust from the mean division.
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi)
        return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs)
        s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double stddev(const std::vector<double>& xs) { return std::sqrt(variance(xs)); }

double quantile(std::vector<double> xs, double p) {
    if (xs.empty())
        throw std::invalid_argument("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = p * (static_cast<double>(xs.size()) - 1.0);
    const size_t i = static_cast<size_t>(h);
    if (i + 1 >= xs.size())
        return xs.back();
    const double frac = h - static_cast<double>(i);
    return xs[i] + frac * (xs[i + 1] - xs[i]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need matched samples of size >= 2");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need matched samples of size >= 2");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement step.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double ks_distance_normal(std::vector<double> sample) {
    if (sample.empty())
        throw std::invalid_argument("ks_distance_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double cdf = normal_cdf(sample[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    return d;
}

double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_distance_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t i = 0;
    size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_one_sample_1pct(size_t n) {
    return 1.63 / std::sqrt(static_cast<double>(n));
}

double ks_critical_two_sample_1pct(size_t n, size_t m) {
    return 1.63 * std::sqrt(static_cast<double>(n + m) /
                            (static_cast<double>(n) * static_cast<double>(m)));
}

double anderson_darling_normal(std::vector<double> sample) {
    std::sort(sample.begin(), sample.end());
    const size_t n = sample.size();
    const double nd = static_cast<double>(n);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double phi_lo = std::max(normal_cdf(sample[i]), 1e-300);
        const double phi_hi = std::max(1.0 - normal_cdf(sample[n - 1 - i]), 1e-300);
        s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(phi_lo) + std::log(phi_hi));
    }
    return -nd - s / nd;
}

double regularized_gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0)
        throw std::invalid_argument("regularized_gamma_p: bad arguments");
    if (x == 0.0)
        return 0.0;
    if (x < a + 1.0) {
        // Series representation.
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15)
                break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // Continued fraction for Q(a,x), modified Lentz.
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300)
            d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300)
            c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15)
            break;
    }
    const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    return 1.0 - q;
}

double chi_square_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0) || dof <= 0.0)
        throw std::invalid_argument("chi_square_quantile: bad arguments");
    double lo = 0.0;
    double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
    while (regularized_gamma_p(dof / 2.0, hi / 2.0) < p)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (regularized_gamma_p(dof / 2.0, mid / 2.0) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

WilsonInterval wilson_interval(size_t successes, size_t trials, double z) {
    if (trials == 0)
        throw std::invalid_argument("wilson_interval: zero trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = p + z2 / (2.0 * n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return WilsonInterval{std::max(0.0, (center - half) / denom),
                          std::min(1.0, (center + half) / denom)};
}

double jackknife_variance_se(const std::vector<double>& xs) {
    const size_t n = xs.size();
    if (n < 3)
        throw std::invalid_argument("jackknife_variance_se: need at least three samples");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi)
        return 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (double x : xs) {
        s1 += x;
        s2 += x * x;
    }
    const double nd = static_cast<double>(n);
    std::vector<double> loo(n);
    for (size_t i = 0; i < n; ++i) {
        const double m = (s1 - xs[i]) / (nd - 1.0);
        loo[i] = (s2 - xs[i] * xs[i] - (nd - 1.0) * m * m) / (nd - 2.0);
    }
    const double lm = mean(loo);
    double s = 0.0;
    for (double v : loo)
        s += (v - lm) * (v - lm);
    return std::sqrt(s * (nd - 1.0) / nd);
}

} // namespace polymer

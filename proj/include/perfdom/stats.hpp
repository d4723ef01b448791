#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace perfdom {

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 at 95%).
inline WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    double p = static_cast<double>(successes) / static_cast<double>(n);
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = a + b x with the usual slope standard error.
inline LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("line_fit: need >= 2 matched points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("line_fit: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double sse = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = y[i] - (f.intercept + f.slope * x[i]);
            sse += e * e;
        }
        f.slope_stderr = std::sqrt(sse / (n - 2) / sxx);
    }
    return f;
}

/// Least-squares slope of log(y) against log(x). Pairs with y <= 0 are
/// rejected (callers filter empty Monte Carlo rungs first).
inline LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw std::invalid_argument("loglog_fit: nonpositive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return line_fit(lx, ly);
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // sample variance
    std::size_t n = 0;
};

inline MeanVar mean_var(const std::vector<double>& v) {
    MeanVar m;
    m.n = v.size();
    if (m.n == 0) return m;
    for (double t : v) m.mean += t;
    m.mean /= m.n;
    if (m.n > 1) {
        for (double t : v) m.var += (t - m.mean) * (t - m.mean);
        m.var /= (m.n - 1);
    }
    return m;
}

}  // namespace perfdom

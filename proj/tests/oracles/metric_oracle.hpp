#pragma once

// Reference implementations for verification metrics, computed by brute force or in
// extended precision.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Piecewise-linear CDF through (values, levels), 0 below the first value, 1 from the last.
inline double step_linear_cdf(const std::vector<double>& lv, const std::vector<double>& v, double u) {
    if (u < v.front()) return 0.0;
    if (u >= v.back()) return 1.0;
    std::size_t i = 0;
    while (i + 1 < v.size() && v[i + 1] <= u) ++i;
    if (v[i + 1] == v[i]) return lv[i + 1];
    return lv[i] + (lv[i + 1] - lv[i]) * (u - v[i]) / (v[i + 1] - v[i]);
}

// Trapezoidal integration of (F - 1{u >= y})^2 on each piece between discontinuities,
// with spacing at most h.
inline double crps_trapezoid(const std::vector<double>& lv, const std::vector<double>& v, double y, double h) {
    std::vector<double> cuts(v);
    cuts.push_back(y);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (!(b > a)) continue;
        const auto steps = static_cast<long>(std::ceil((b - a) / h));
        const double dx = (b - a) / static_cast<double>(steps);
        const double mid = 0.5 * (a + b);
        const double ind = mid >= y ? 1.0 : 0.0;
        // Evaluate F just inside the piece so jumps at the ends are excluded.
        auto g = [&](double u) {
            const double uu = std::clamp(u, a + 1e-12 * (b - a), b - 1e-12 * (b - a));
            const double f = step_linear_cdf(lv, v, uu) - ind;
            return f * f;
        };
        double s = 0.5 * (g(a) + g(b));
        for (long i = 1; i < steps; ++i) s += g(a + dx * static_cast<double>(i));
        total += s * dx;
    }
    // Tails: below min(v0, y) and above max(vN, y) the integrand is zero.
    return total;
}

using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline double kupiec_lr(std::size_t violations, std::size_t total, double p) {
    const BigFloat n1 = violations, n0 = total - violations, n = total;
    const BigFloat P = p, pi = n1 / n;
    BigFloat ll_null = 0, ll_alt = 0;
    if (violations > 0) {
        ll_null += n1 * log(P);
        ll_alt += n1 * log(pi);
    }
    if (violations < total) {
        ll_null += n0 * log(1 - P);
        ll_alt += n0 * log(1 - pi);
    }
    return static_cast<double>(-2 * (ll_null - ll_alt));
}

// Diebold-Mariano statistic with Bartlett weights, accumulated in long double.
inline double dm_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    std::vector<long double> d(n);
    long double mean = 0;
    for (std::size_t t = 0; t < n; ++t) {
        d[t] = static_cast<long double>(a[t]) - b[t];
        mean += d[t];
    }
    mean /= n;
    std::size_t L = 0;
    while ((L + 1) * (L + 1) * (L + 1) <= n) ++L;
    long double v = 0;
    for (std::size_t k = 0; k <= L; ++k) {
        long double g = 0;
        for (std::size_t t = k; t < n; ++t) g += (d[t] - mean) * (d[t - k] - mean);
        g /= n;
        v += k == 0 ? g : 2 * (1 - static_cast<long double>(k) / (L + 1)) * g;
    }
    return static_cast<double>(mean / std::sqrt(v / n));
}

}  // namespace oracle

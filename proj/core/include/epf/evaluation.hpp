#pragma once

#include "epf/common.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace epf {

/// Description of the predictive CDF built from the nine quantiles, stamped on reports.
inline constexpr std::string_view kCdfConstruction =
    "piecewise linear between the nine quantiles; jumps to 0 and 1 at the outer quantiles";

/// (y - yhat) q when yhat <= y, else (yhat - y)(1 - q).
double pinball(double y, double yhat, double q);

/// Mean pinball over pairs with an observed y. NaN when nothing is observed.
double mean_pinball(std::span<const double> y, std::span<const double> yhat, double q);

/// CRPS of the nine-quantile predictive CDF: zero below the first quantile value,
/// a jump to the first level there, linear between adjacent (value, level) points,
/// and a jump to one at the last value. Evaluated in closed form.
/// Throws ValidationError when the values decrease.
double crps(std::span<const double> levels, std::span<const double> values, double y);

/// Mean CRPS over rows with an observed y.
double mean_crps(const QuantileSurface& surface, std::span<const double> y);

/// Central interval bounds for a nominal coverage, e.g. 0.95 -> (0.025, 0.975).
std::pair<double, double> interval_levels(double coverage);

struct PicpReport {
    double coverage = 0.0;  // nominal
    double rate = 0.0;
    std::size_t hits = 0;
    std::size_t total = 0;
    /// Indexed by dispatch period 0..287 (interval-of-day minus one).
    std::vector<std::size_t> period_hits;
    std::vector<std::size_t> period_total;

    [[nodiscard]] double period_rate(std::size_t period) const;
};

/// Share of observations inside [lower, upper] of the central interval. Rows with a
/// missing observation are skipped.
PicpReport picp(const QuantileSurface& surface, std::span<const double> y, double coverage);

struct Bars {
    double low = 0.0;
    double high = 0.0;
};

/// p -/+ z sqrt(p(1-p)/n) as coverage rates.
Bars consistency_bars(std::size_t n, double p, double z = 1.96);

struct DmResult {
    double statistic = 0.0;
    /// One-sided: small values mean loss_a exceeds loss_b, i.e. b is more accurate.
    double p_value = 0.5;
    std::size_t lag = 0;
    std::size_t n = 0;
    bool variance_floored = false;
};

/// Diebold-Mariano on d = loss_a - loss_b with a Bartlett-weighted long-run variance
/// using floor(n^(1/3)) lags. Throws ArgumentError for unequal or short (< 30) inputs.
DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b);

struct KupiecResult {
    double lr = 0.0;
    double p_value = 1.0;
    std::size_t violations = 0;
    std::size_t total = 0;
    double rate = 0.0;
};

/// Proportion-of-failures likelihood ratio against nominal violation probability p,
/// chi-square with one degree of freedom.
KupiecResult kupiec_pof(std::size_t violations, std::size_t total, double p);

/// Standard normal CDF.
double normal_cdf(double x);

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;      // n - 1 denominator
    double median = 0.0;
    double mad = 0.0;     // median absolute deviation about the median, unscaled
    double skew = 0.0;    // m3 / m2^1.5
    double kurtosis = 0.0;  // m4 / m2^2, normal = 3
    double min = 0.0;
    double max = 0.0;
};

/// Missing values are ignored. Throws ArgumentError for fewer than two values.
SummaryStats summary_stats(std::span<const double> values);

struct AbsErrorStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
};

/// Over pairs where both values are present.
AbsErrorStats abs_error_stats(std::span<const double> forecast, std::span<const double> observed);

double median_of(std::vector<double> values);

inline constexpr std::array<double, 4> kPicpCoverages{0.5, 0.8, 0.9, 0.95};

struct EvaluationReport {
    std::vector<double> levels;
    std::vector<double> mean_pinball;
    double mean_crps = 0.0;
    std::vector<PicpReport> picp;
    std::size_t observed = 0;
};

/// Per-level pinball, CRPS and PICP at each coverage in kPicpCoverages.
EvaluationReport evaluate_forecast(const QuantileSurface& surface, std::span<const double> y);

}  // namespace epf

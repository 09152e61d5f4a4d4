#include "epf/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace epf {

double pinball(double y, double yhat, double q) { return yhat <= y ? (y - yhat) * q : (yhat - y) * (1.0 - q); }

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ArgumentError(std::string(what) + ": lengths differ (" + std::to_string(a) + " vs " +
                            std::to_string(b) + ")");
    }
}

// Integral over a segment of length len of (F - h)^2 with F linear from f0 to f1.
double segment(double len, double f0, double f1, double h) {
    const double a = f0 - h, b = f1 - h;
    return len * (a * a + a * b + b * b) / 3.0;
}

}  // namespace

double mean_pinball(std::span<const double> y, std::span<const double> yhat, double q) {
    require_same_length(y.size(), yhat.size(), "mean_pinball");
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::isnan(y[i])) continue;
        total += pinball(y[i], yhat[i], q);
        ++n;
    }
    return n == 0 ? std::nan("") : total / static_cast<double>(n);
}

double crps(std::span<const double> levels, std::span<const double> values, double y) {
    require_same_length(levels.size(), values.size(), "crps");
    if (values.empty()) throw ArgumentError("crps: empty quantile set");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1]) {
            throw ValidationError("crps: quantiles cross between levels " + std::to_string(levels[i - 1]) + " and " +
                                  std::to_string(levels[i]) + "; sort them first");
        }
    }
    double total = 0.0;
    if (y < values.front()) total += values.front() - y;
    if (y > values.back()) total += y - values.back();
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double a = values[i], b = values[i + 1];
        if (!(b > a)) continue;
        const double fa = levels[i], fb = levels[i + 1];
        if (y <= a) {
            total += segment(b - a, fa, fb, 1.0);
        } else if (y >= b) {
            total += segment(b - a, fa, fb, 0.0);
        } else {
            const double fy = fa + (fb - fa) * (y - a) / (b - a);
            total += segment(y - a, fa, fy, 0.0) + segment(b - y, fy, fb, 1.0);
        }
    }
    return total;
}

double mean_crps(const QuantileSurface& surface, std::span<const double> y) {
    require_same_length(surface.rows(), y.size(), "mean_crps");
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < surface.rows(); ++r) {
        if (std::isnan(y[r])) continue;
        total += crps(surface.levels, surface.row(r), y[r]);
        ++n;
    }
    return n == 0 ? std::nan("") : total / static_cast<double>(n);
}

std::pair<double, double> interval_levels(double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0)) throw ArgumentError("interval coverage must be in (0,1)");
    const double tail = (1.0 - coverage) / 2.0;
    return {tail, 1.0 - tail};
}

double PicpReport::period_rate(std::size_t period) const {
    if (period >= period_total.size() || period_total[period] == 0) return std::nan("");
    return static_cast<double>(period_hits[period]) / static_cast<double>(period_total[period]);
}

PicpReport picp(const QuantileSurface& surface, std::span<const double> y, double coverage) {
    require_same_length(surface.rows(), y.size(), "picp");
    const auto [lo_level, hi_level] = interval_levels(coverage);
    const std::size_t lo = surface.level_index(lo_level), hi = surface.level_index(hi_level);
    PicpReport rep;
    rep.coverage = coverage;
    rep.period_hits.assign(kIntervalsPerDay, 0);
    rep.period_total.assign(kIntervalsPerDay, 0);
    for (std::size_t r = 0; r < surface.rows(); ++r) {
        if (std::isnan(y[r])) continue;
        const std::size_t period = interval_of_day(surface.time_at(r)) - 1;
        const bool inside = surface.at(r, lo) <= y[r] && y[r] <= surface.at(r, hi);
        ++rep.total;
        ++rep.period_total[period];
        if (inside) {
            ++rep.hits;
            ++rep.period_hits[period];
        }
    }
    rep.rate = rep.total == 0 ? std::nan("") : static_cast<double>(rep.hits) / static_cast<double>(rep.total);
    return rep;
}

Bars consistency_bars(std::size_t n, double p, double z) {
    if (n == 0) throw ArgumentError("consistency bars: n must be positive");
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("consistency bars: p must be in (0,1)");
    const double half = z * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return {p - half, p + half};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b) {
    require_same_length(loss_a.size(), loss_b.size(), "diebold_mariano");
    const std::size_t n = loss_a.size();
    if (n < 30) throw ArgumentError("diebold_mariano: need at least 30 paired losses, have " + std::to_string(n));
    std::vector<double> d(n);
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        d[t] = loss_a[t] - loss_b[t];
        mean += d[t];
    }
    mean /= static_cast<double>(n);

    DmResult res;
    res.n = n;
    res.lag = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
    auto autocov = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += (d[t] - mean) * (d[t - k] - mean);
        return s / static_cast<double>(n);
    };
    double lrv = autocov(0);
    for (std::size_t k = 1; k <= res.lag; ++k) {
        lrv += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(res.lag + 1)) * autocov(k);
    }
    if (mean == 0.0 && lrv <= 0.0) return res;
    const double floor = 1e-12 * (1.0 + mean * mean);
    if (lrv < floor) {
        lrv = floor;
        res.variance_floored = true;
    }
    res.statistic = mean / std::sqrt(lrv / static_cast<double>(n));
    res.p_value = 1.0 - normal_cdf(res.statistic);
    return res;
}

KupiecResult kupiec_pof(std::size_t violations, std::size_t total, double p) {
    if (total == 0) throw ArgumentError("kupiec: no observations");
    if (violations > total) throw ArgumentError("kupiec: more violations than observations");
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("kupiec: nominal rate must be in (0,1)");
    KupiecResult res;
    res.violations = violations;
    res.total = total;
    const auto n1 = static_cast<double>(violations);
    const auto n0 = static_cast<double>(total - violations);
    const double pi = n1 / static_cast<double>(total);
    res.rate = pi;
    auto term = [](double count, double nominal, double observed) {
        return count == 0.0 ? 0.0 : count * (std::log(nominal) - std::log(observed));
    };
    const double lr = -2.0 * (term(n0, 1.0 - p, 1.0 - pi) + term(n1, p, pi));
    res.lr = std::max(0.0, lr);
    res.p_value = std::erfc(std::sqrt(res.lr / 2.0));
    return res;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    return 0.5 * (lower + upper);
}

SummaryStats summary_stats(std::span<const double> values) {
    std::vector<double> x;
    for (double v : values) {
        if (!std::isnan(v)) x.push_back(v);
    }
    if (x.size() < 2) throw ArgumentError("summary statistics need at least two values");
    SummaryStats s;
    s.n = x.size();
    const auto n = static_cast<double>(x.size());
    for (double v : x) s.mean += v;
    s.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double e = v - s.mean, e2 = e * e;
        m2 += e2;
        m3 += e2 * e;
        m4 += e2 * e2;
    }
    s.sd = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    s.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    s.min = *mn;
    s.max = *mx;
    s.median = median_of(x);
    std::vector<double> dev;
    dev.reserve(x.size());
    for (double v : x) dev.push_back(std::abs(v - s.median));
    s.mad = median_of(std::move(dev));
    return s;
}

AbsErrorStats abs_error_stats(std::span<const double> forecast, std::span<const double> observed) {
    require_same_length(forecast.size(), observed.size(), "abs_error_stats");
    std::vector<double> err;
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        if (std::isnan(forecast[i]) || std::isnan(observed[i])) continue;
        err.push_back(std::abs(forecast[i] - observed[i]));
    }
    AbsErrorStats s;
    s.n = err.size();
    if (err.empty()) {
        s.mean = s.median = std::nan("");
        return s;
    }
    for (double e : err) s.mean += e;
    s.mean /= static_cast<double>(err.size());
    s.median = median_of(std::move(err));
    return s;
}

EvaluationReport evaluate_forecast(const QuantileSurface& surface, std::span<const double> y) {
    require_same_length(surface.rows(), y.size(), "evaluate_forecast");
    EvaluationReport rep;
    rep.levels = surface.levels;
    for (std::size_t c = 0; c < surface.cols(); ++c) {
        rep.mean_pinball.push_back(mean_pinball(y, surface.column(c), surface.levels[c]));
    }
    rep.mean_crps = mean_crps(surface, y);
    for (double cov : kPicpCoverages) rep.picp.push_back(picp(surface, y, cov));
    rep.observed = rep.picp.empty() ? 0 : rep.picp.front().total;
    return rep;
}

}  // namespace epf

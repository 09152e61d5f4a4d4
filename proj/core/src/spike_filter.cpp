#include "epf/spike_filter.hpp"

#include "epf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Multiset of values drawn from a fixed universe, supporting k-th order statistics
// in O(log n) through a Fenwick tree over value ranks.
class OrderStatisticWindow {
public:
    explicit OrderStatisticWindow(std::vector<double> universe) : values_(std::move(universe)) {
        std::sort(values_.begin(), values_.end());
        values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
        tree_.assign(values_.size() + 1, 0);
        top_bit_ = 1;
        while (top_bit_ * 2 <= values_.size()) top_bit_ *= 2;
    }

    void insert(double v) { update(rank(v), +1); }
    void erase(double v) { update(rank(v), -1); }
    [[nodiscard]] std::size_t count() const { return count_; }

    // 0-based k-th smallest.
    [[nodiscard]] double kth(std::size_t k) const {
        std::size_t pos = 0;
        long remaining = static_cast<long>(k) + 1;
        for (std::size_t step = top_bit_; step > 0; step /= 2) {
            const std::size_t next = pos + step;
            if (next < tree_.size() && tree_[next] < remaining) {
                pos = next;
                remaining -= tree_[next];
            }
        }
        return values_[pos];
    }

    [[nodiscard]] double quantile(double level) const {
        if (count_ == 0) return kNaN;
        const double h = static_cast<double>(count_ - 1) * level;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double v_lo = kth(lo);
        const double v_hi = lo + 1 < count_ ? kth(lo + 1) : v_lo;
        return v_lo + (h - static_cast<double>(lo)) * (v_hi - v_lo);
    }

private:
    [[nodiscard]] std::size_t rank(double v) const {
        return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), v) - values_.begin());
    }

    void update(std::size_t r, long delta) {
        count_ = static_cast<std::size_t>(static_cast<long>(count_) + delta);
        for (std::size_t i = r + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    std::vector<double> values_;
    std::vector<long> tree_;
    std::size_t top_bit_ = 1;
    std::size_t count_ = 0;
};

std::vector<double> finite_values(std::span<const double> series) {
    std::vector<double> out;
    out.reserve(series.size());
    for (double v : series) {
        if (!std::isnan(v)) out.push_back(v);
    }
    return out;
}

}  // namespace

const char* to_string(SpikeLabel label) {
    switch (label) {
        case SpikeLabel::positive: return "positive";
        case SpikeLabel::negative: return "negative";
        case SpikeLabel::none: break;
    }
    return "none";
}

void SpikeConfig::validate() const {
    if (!(lower_level > 0.0 && lower_level < upper_level && upper_level < 1.0)) {
        throw ArgumentError("spike filter: need 0 < lower_level < upper_level < 1");
    }
    if (annual_days == 0 || monthly_days == 0) throw ArgumentError("spike filter: windows must be non-empty");
}

double type7_quantile(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw ArgumentError("type7_quantile: empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> rolling_quantile(std::span<const double> series, std::size_t window, double level) {
    if (window == 0) throw ArgumentError("rolling_quantile: window must be positive");
    OrderStatisticWindow w(finite_values(series));
    std::vector<double> out(series.size(), kNaN);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (t >= window) {
            out[t] = w.quantile(level);
            const double leaving = series[t - window];
            if (!std::isnan(leaving)) w.erase(leaving);
        }
        if (!std::isnan(series[t])) w.insert(series[t]);
    }
    return out;
}

SpikeLabel classify_price(double y, double upper_annual, double upper_monthly, double lower_annual,
                          double lower_monthly) {
    if (std::isnan(y)) return SpikeLabel::none;
    if (y > 0.0 && !std::isnan(upper_annual) && !std::isnan(upper_monthly) && y > upper_annual + upper_monthly) {
        return SpikeLabel::positive;
    }
    if (y < 0.0 && !std::isnan(lower_annual) && !std::isnan(lower_monthly) &&
        y < (lower_annual + lower_monthly) / 2.0) {
        return SpikeLabel::negative;
    }
    return SpikeLabel::none;
}

SpikeMask filter_spikes(const PriceSeries& raw, const SpikeConfig& cfg) {
    cfg.validate();
    const std::size_t annual = cfg.annual_days * kIntervalsPerDay;
    const std::size_t monthly = cfg.monthly_days * kIntervalsPerDay;
    const auto& y = raw.values;
    const std::size_t n = y.size();

    // Imputed values are copies of raw values, so one rank universe serves both sources.
    const auto universe = finite_values(y);
    OrderStatisticWindow win_a(universe);
    OrderStatisticWindow win_m(universe);

    SpikeMask mask;
    mask.labels.assign(n, SpikeLabel::none);
    mask.imputed = raw;
    const std::vector<double>& source = cfg.source == ThresholdSource::raw ? y : mask.imputed.values;

    double last_clean = kNaN;
    for (std::size_t t = 0; t < n; ++t) {
        if (t >= annual && t >= monthly) {
            mask.labels[t] = classify_price(y[t], win_a.quantile(cfg.upper_level), win_m.quantile(cfg.upper_level),
                                            win_a.quantile(cfg.lower_level), win_m.quantile(cfg.lower_level));
        }
        if (mask.labels[t] == SpikeLabel::none) {
            if (!std::isnan(y[t])) last_clean = y[t];
        } else {
            mask.imputed.values[t] = last_clean;
        }
        if (t >= annual && !std::isnan(source[t - annual])) win_a.erase(source[t - annual]);
        if (t >= monthly && !std::isnan(source[t - monthly])) win_m.erase(source[t - monthly]);
        if (!std::isnan(source[t])) {
            win_a.insert(source[t]);
            win_m.insert(source[t]);
        }
    }

    // Leading spikes (no earlier clean value) take the first later clean value.
    std::size_t first_clean = n;
    for (std::size_t t = 0; t < n; ++t) {
        if (mask.labels[t] == SpikeLabel::none && !std::isnan(y[t])) {
            first_clean = t;
            break;
        }
    }
    for (std::size_t t = 0; t < std::min(first_clean, n); ++t) {
        if (mask.labels[t] != SpikeLabel::none) mask.imputed.values[t] = first_clean < n ? y[first_clean] : kNaN;
    }
    return mask;
}

std::vector<SpikeLabel> classify_spikes(const PriceSeries& raw, const SpikeConfig& cfg) {
    SpikeConfig c = cfg;
    c.source = ThresholdSource::raw;
    return filter_spikes(raw, c).labels;
}

PriceSeries impute_neighbor(const PriceSeries& raw, std::span<const SpikeLabel> labels) {
    if (labels.size() != raw.size()) throw ArgumentError("impute_neighbor: labels not aligned with series");
    PriceSeries out = raw;
    const std::size_t n = raw.size();
    std::size_t first_clean = n;
    for (std::size_t t = 0; t < n; ++t) {
        if (labels[t] == SpikeLabel::none && !std::isnan(raw.values[t])) {
            first_clean = t;
            break;
        }
    }
    double last_clean = first_clean < n ? raw.values[first_clean] : kNaN;
    for (std::size_t t = 0; t < n; ++t) {
        if (labels[t] == SpikeLabel::none) {
            if (!std::isnan(raw.values[t])) last_clean = raw.values[t];
        } else {
            out.values[t] = last_clean;
        }
    }
    return out;
}

void write_filter_csv(const std::filesystem::path& path, const PriceSeries& raw, const SpikeMask& mask) {
    auto out = csv::open_output(path);
    out << "timestamp,raw,label,imputed\n";
    for (std::size_t t = 0; t < raw.size(); ++t) {
        out << format_timestamp(raw.time_at(t)) << ',' << csv::format_double(raw.values[t]) << ','
            << to_string(mask.labels[t]) << ',' << csv::format_double(mask.imputed.values[t]) << '\n';
    }
}

}  // namespace epf

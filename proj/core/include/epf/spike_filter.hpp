#pragma once

#include "epf/data_pipeline.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace epf {

enum class SpikeLabel : std::uint8_t { none = 0, positive = 1, negative = 2 };

const char* to_string(SpikeLabel label);

/// Which series feeds the trailing quantile statistics.
enum class ThresholdSource { raw, imputed };

struct SpikeConfig {
    std::size_t annual_days = 365;
    std::size_t monthly_days = 30;
    double upper_level = 0.975;
    double lower_level = 0.025;
    ThresholdSource source = ThresholdSource::raw;

    /// Throws ArgumentError unless 0 < lower < upper < 1 and both windows are non-empty.
    void validate() const;
};

struct SpikeMask {
    std::vector<SpikeLabel> labels;
    PriceSeries imputed;
};

/// Empirical quantile with sorted-order linear interpolation (type 7). `sorted` must
/// be ascending and non-empty.
double type7_quantile(std::span<const double> sorted, double level);

/// Value at t is the `level` quantile of the `window` observations strictly before t
/// (missing entries skipped). NaN while the window is not yet fully populated.
std::vector<double> rolling_quantile(std::span<const double> series, std::size_t window, double level);

/// Thresholds used by the classification rule at each timestamp.
struct SpikeThresholds {
    std::vector<double> upper_annual, upper_monthly, lower_annual, lower_monthly;
};

/// Positive spike iff y > 0 and y > Qa+ + Qm+; negative spike iff y < 0 and
/// y < (Qa- + Qm-)/2. Unavailable thresholds yield `none`.
SpikeLabel classify_price(double y, double upper_annual, double upper_monthly, double lower_annual,
                          double lower_monthly);

/// Labels over the raw series with thresholds computed from the raw series.
std::vector<SpikeLabel> classify_spikes(const PriceSeries& raw, const SpikeConfig& cfg);

/// Replaces each spike with the latest preceding non-spike value; leading spikes take
/// the first later non-spike value.
PriceSeries impute_neighbor(const PriceSeries& raw, std::span<const SpikeLabel> labels);

/// Classification followed by imputation. With ThresholdSource::imputed the trailing
/// statistics are computed sequentially over the already-imputed prefix.
SpikeMask filter_spikes(const PriceSeries& raw, const SpikeConfig& cfg);

/// Writes `timestamp,raw,label,imputed`.
void write_filter_csv(const std::filesystem::path& path, const PriceSeries& raw, const SpikeMask& mask);

}  // namespace epf

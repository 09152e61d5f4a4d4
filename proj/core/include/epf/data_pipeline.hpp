#pragma once

#include "epf/common.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace epf {

/// Uniformly gridded 5-minute spot prices. Missing observations are NaN entries;
/// the grid itself never skips a step.
struct PriceSeries {
    Timestamp start{};
    std::vector<double> values;
    std::string region;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] Timestamp time_at(std::size_t i) const { return start + kStep * static_cast<long>(i); }
    /// Row of `t`; throws ArgumentError when `t` is off-grid or before the start.
    [[nodiscard]] std::size_t index_of(Timestamp t) const;
    [[nodiscard]] Timestamp end_time() const { return time_at(values.size()); }
};

struct PriceCsvSchema {
    std::string timestamp_column = "timestamp";
    std::string price_column = "price";
    /// Longest allowed run of missing intervals, in 5-minute steps.
    std::size_t max_gap_intervals = 12;
    double price_floor = -1000.0;
    double price_cap = 15100.0;
};

struct LoadedPrices {
    PriceSeries series;
    std::vector<std::string> warnings;
};

LoadedPrices load_price_csv(const std::filesystem::path& path, const PriceCsvSchema& schema = {});

/// Writes `timestamp,price` with round-trip number formatting.
void write_price_csv(const std::filesystem::path& path, const PriceSeries& series);

struct WeatherRecord {
    Timestamp time{};
    std::string station;
    double wind_kmh = 0.0;
    double temp_c = 0.0;
    double humidity_pct = 0.0;
    double cloud_pct = 0.0;
};

/// Weather resampled onto a price grid: one set of columns per station.
struct WeatherSeries {
    Timestamp start{};
    std::size_t length = 0;
    std::vector<std::string> stations;
    // Indexed [station][row].
    std::vector<std::vector<double>> wind_kmh;
    std::vector<std::vector<double>> temp_c;
    std::vector<std::vector<double>> humidity_pct;
    std::vector<std::vector<double>> cloud_pct;

    [[nodiscard]] bool empty() const { return stations.empty(); }
};

/// Reads `timestamp,station,wind_kmh,temp_c,humidity_pct,cloud_pct`. Humidity and
/// cloud cover outside [0,100] are validation errors.
std::vector<WeatherRecord> load_weather_csv(const std::filesystem::path& path);

void write_weather_csv(const std::filesystem::path& path, const std::vector<WeatherRecord>& records);

/// Forward-fills each station onto the grid [start, start + length*5min). A grid
/// point further than `max_fill` from the latest record (or before the first
/// record) is a ValidationError.
WeatherSeries resample_weather(const std::vector<WeatherRecord>& records, Timestamp start, std::size_t length,
                               std::chrono::seconds max_fill = std::chrono::hours{6});

struct FeatureConfig {
    bool intercept = true;
    /// Highest power of the interval index; 1 keeps only the raw index.
    int polynomial_degree = 6;
    bool weather = true;
    bool weather_squares = true;
};

/// Linear models get the full augmented set; tree and kernel models drop the
/// intercept and the polynomial/quadratic augmentations.
inline FeatureConfig linear_features() { return {}; }
inline FeatureConfig nonlinear_features() { return {false, 1, true, false}; }

inline constexpr std::size_t kLagDay = 288;
inline constexpr std::size_t kLagWeek = 2016;

/// Feature rows aligned with target rows of a price grid.
struct DesignMatrix {
    std::vector<std::string> column_names;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X;
    std::vector<double> targets;            // NaN where the target is unknown
    std::vector<std::size_t> source_rows;   // grid index of each row's target
    Timestamp grid_start{};

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
    [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
};

enum class TargetPolicy { require, optional };

/// Builds rows for target grid indices [begin, end). `prices` may end before `end`
/// (forecast rows); lags are read only from `prices`. Rows whose lags are missing
/// are dropped, as are rows with missing targets under TargetPolicy::require.
/// Throws ValidationError when `begin` has less than one week of history.
DesignMatrix build_design_matrix(const PriceSeries& prices, const WeatherSeries* weather,
                                 const FeatureConfig& config, std::size_t begin, std::size_t end,
                                 TargetPolicy policy = TargetPolicy::require);

/// Column names produced for a feature configuration and station list.
std::vector<std::string> design_columns(const FeatureConfig& config, const std::vector<std::string>& stations);

/// Half-open row range on the price grid.
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const { return end - begin; }
    friend bool operator==(const RowRange&, const RowRange&) = default;
};

struct RollingWindowPlan {
    Date first_test_day{};
    std::size_t n_test_days = 1;
    std::size_t spike_days = 365;
    std::vector<std::size_t> constituent_days{30, 90, 365};
    std::size_t ensemble_days = 35;

    /// Total days of history required before a test day.
    [[nodiscard]] std::size_t required_days() const;
};

struct SeriesExtent {
    Timestamp start{};
    std::size_t length = 0;
};

struct WindowView {
    Date test_day{};
    RowRange spike_stats;
    /// One per configured constituent length, each ending where the ensemble window starts.
    std::vector<RowRange> constituents;
    RowRange ensemble;
    RowRange test;
};

/// Earliest test day whose windows fit in `extent`.
Date earliest_feasible_test_day(const RollingWindowPlan& plan, const SeriesExtent& extent);

/// Per-day window views. Throws ValidationError naming the earliest feasible
/// test day when the extent is too short.
std::vector<WindowView> rolling_windows(const RollingWindowPlan& plan, const SeriesExtent& extent);

}  // namespace epf

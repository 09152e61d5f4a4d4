#pragma once

#include "epf/config.hpp"
#include "epf/data_pipeline.hpp"
#include "epf/ensemble.hpp"
#include "epf/spike_filter.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epf {

struct BacktestInputs {
    PriceSeries prices;
    std::optional<WeatherSeries> weather;
    std::vector<std::string> warnings;
};

/// Loads the price file and, when configured, the weather file resampled onto the
/// price grid.
BacktestInputs load_inputs(const RunConfig& config);

/// Test days [from, to] and the days whose constituent forecasts they need.
struct BacktestSchedule {
    Date first_forecast_day{};
    Date first_test_day{};
    Date last_test_day{};

    [[nodiscard]] std::size_t forecast_days() const;
    [[nodiscard]] std::size_t test_days() const;
};

/// Resolves missing from/to (earliest feasible day, last complete day) and checks
/// that every window fits in the data. Throws ValidationError naming the earliest
/// feasible test day otherwise.
BacktestSchedule plan_backtest(const RunConfig& config, const PriceSeries& prices);

struct CausalityRecord {
    Date day{};
    std::string stage;
    Timestamp latest_input{};
    Timestamp issue_time{};
    bool ok = false;
};

struct ArRecord {
    Date day{};
    std::string model;
    std::vector<double> phi;
    double spectral_radius = 0.0;
};

struct CoefficientRecord {
    Date day{};
    EnsembleKind kind = EnsembleKind::qqra;
    LevelCoefficients fit;
};

/// In-sample mean pinball of an ensemble fit against its best single input column.
struct InsampleRecord {
    Date day{};
    EnsembleKind kind = EnsembleKind::qqra;
    double level = 0.5;
    double ensemble = 0.0;
    std::string best_input;
    double best_input_value = 0.0;
};

/// Point forecast stages over the test days.
struct PointStages {
    std::vector<double> raw, smoothed, postprocessed;
};

struct BacktestResult {
    std::string config_hash;
    BacktestSchedule schedule;
    Timestamp start{};  // first test-day row
    std::vector<std::string> quantile_ids;
    std::string point_id;

    // Test-day rows only, concatenated in time order.
    std::vector<double> observed;
    std::vector<double> imputed;
    std::vector<SpikeLabel> labels;
    std::map<std::string, QuantileSurface> raw, smoothed, postprocessed;
    std::optional<PointStages> point;
    std::map<EnsembleKind, QuantileSurface> ensemble;
    std::map<EnsembleKind, std::vector<std::string>> manifests;

    std::vector<CoefficientRecord> coefficients;
    std::vector<ArRecord> ar_models;
    std::vector<InsampleRecord> insample;
    std::vector<CausalityRecord> causality;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t rows() const { return observed.size(); }
};

/// Daily rolling backtest. For every day from first_forecast_day to last_test_day the
/// constituents are refitted on their trailing windows of the spike-filtered history
/// strictly before that day and forecast its 288 intervals; the forecasts are
/// smoothed. For each test day, AR residual models are fitted on the ensemble window,
/// every window day and the test day are shifted, and QRA/Q-QRA are fitted on the
/// window and applied to the test day. Failures abort with the day and stage.
BacktestResult run_backtest(const RunConfig& config, const BacktestInputs& inputs);

/// Writes manifest.json, config.txt, observations.csv, surfaces/, ensemble/,
/// coefficients/, diagnostics/, causality.csv and warnings.txt.
void write_artifacts(const std::filesystem::path& dir, const RunConfig& config, const BacktestResult& result);

/// Records an aborted run in manifest.json (status "failed").
void write_failure_manifest(const std::filesystem::path& dir, const RunConfig& config, const std::string& message);

/// Artifact contents needed for evaluation, read back from disk.
struct StoredRun {
    std::string config_hash;
    std::vector<std::string> models;  // postprocessed constituents then ensembles
    std::map<std::string, QuantileSurface> surfaces;
    std::vector<double> observed;
    Timestamp start{};
    std::optional<std::vector<double>> point;
    std::string point_id;
};

/// Reads a completed artifact directory. Throws ValidationError when the run failed
/// or files are missing.
StoredRun read_artifacts(const std::filesystem::path& dir);

}  // namespace epf

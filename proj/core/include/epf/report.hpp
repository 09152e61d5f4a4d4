#pragma once

#include "epf/backtest.hpp"
#include "epf/economic.hpp"
#include "epf/evaluation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epf {

/// Point forecasts keyed by timestamp, read from `timestamp,<column>`.
struct PointForecast {
    std::map<Timestamp, double> values;

    [[nodiscard]] std::optional<double> at(Timestamp t) const;
};

PointForecast load_point_forecast(const std::filesystem::path& path, const std::string& column = "price");

struct DmRow {
    std::string reference;
    std::string other;
    double level = 0.5;
    DmResult overall;
    std::size_t periods_tested = 0;
    /// Periods where the reference has significantly lower pinball loss, and the reverse.
    std::size_t reference_better = 0;
    std::size_t other_better = 0;
};

struct KupiecRow {
    std::string model;
    double level = 0.5;
    KupiecResult overall;
    std::size_t periods_tested = 0;
    std::size_t periods_pass = 0;
};

struct AbsErrorRow {
    std::string model;
    std::string scope;  // "all" or "baseline_times"
    AbsErrorStats stats;
};

struct RunEvaluation {
    std::string config_hash;
    std::size_t days = 0;
    std::vector<double> levels;
    std::vector<std::string> models;
    std::map<std::string, EvaluationReport> reports;
    std::string point_id;
    double point_pinball = 0.0;  // q = 0.5
    std::string reference;
    double significance = 0.05;
    std::vector<DmRow> dm;
    std::vector<KupiecRow> kupiec;
    std::vector<AbsErrorRow> abs_error;
    std::vector<std::string> notes;

    /// Per-period PICP of `model` at `coverage` with its consistency bars.
    [[nodiscard]] const PicpReport& picp(const std::string& model, double coverage) const;
};

struct EvaluateOptions {
    /// Ensemble tested against every other model with Diebold-Mariano.
    std::string reference = "qqra";
    double significance = 0.05;
    /// External point forecast compared on absolute error at its own timestamps.
    std::optional<PointForecast> baseline;
};

/// Pinball, CRPS, PICP, Diebold-Mariano and Kupiec tests over a stored run.
RunEvaluation evaluate_run(const StoredRun& run, const EvaluateOptions& options = {});

/// pinball.csv, crps.csv, picp.csv, picp_by_period.csv, dm.csv, kupiec.csv,
/// abs_error.csv and summary.txt.
void write_evaluation(const std::filesystem::path& dir, const RunEvaluation& evaluation);

/// Reads the artifact, refuses it when `expected_hash` is given and differs from the
/// stamped hash (ValidationError), evaluates and writes the reports to `out`.
RunEvaluation run_evaluate(const std::filesystem::path& artifact, const std::filesystem::path& out,
                           const std::optional<std::string>& expected_hash, const EvaluateOptions& options = {});

inline constexpr std::array<std::string_view, 5> kEconomicModes{"ground_truth", "point", "qqra_median", "qra",
                                                                "qqra"};

struct EconomicOptions {
    BatteryParams battery;
    std::size_t samples = 100;
    std::size_t stride = 6;
    std::size_t offset = 5;
    milp::Options solver;
    /// Subset of kEconomicModes; empty runs every mode the inputs support.
    std::vector<std::string> modes;
    std::optional<PointForecast> point;
};

struct DailyCost {
    std::string prosumer;
    Date day{};
    std::string mode;
    double planned = 0.0;
    double realized = 0.0;
    milp::Status status = milp::Status::unknown;
    double gap = 0.0;
};

struct WeeklyCost {
    std::string prosumer;
    std::string mode;
    std::size_t days = 0;
    double weekly_average = 0.0;
};

struct EconomicReport {
    std::vector<std::string> modes;
    std::vector<DailyCost> daily;
    std::vector<WeeklyCost> weekly;
    std::vector<std::string> warnings;
};

/// Schedules each prosumer's battery on every test day of the run for each mode,
/// using the forecast at every `stride`-th interval (starting at `offset`) converted
/// to AUD/kWh, and re-prices the plan at the observed prices. Plans are written under
/// `out`/plans when `out` is not empty.
EconomicReport run_economic(const StoredRun& run, const std::vector<std::filesystem::path>& prosumers,
                            const EconomicOptions& options, const std::filesystem::path& out = {});

/// daily_cost.csv and weekly_cost.csv (one row per prosumer, one column per mode).
void write_economic(const std::filesystem::path& dir, const EconomicReport& report);

/// Summary statistics per calendar year.
std::vector<std::pair<int, SummaryStats>> yearly_summary(const PriceSeries& prices);

/// Writes the yearly table with its estimator conventions as '#' header lines.
void write_yearly_summary(const std::filesystem::path& path, const std::vector<std::pair<int, SummaryStats>>& rows);

}  // namespace epf

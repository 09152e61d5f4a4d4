#pragma once

#include "epf/common.hpp"
#include "epf/milp.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace epf {

struct BatteryParams {
    double efficiency = 0.9;      // round-trip, applied on discharge
    double e_min = 0.0;           // kWh
    double e_max = 13.5;          // kWh
    double e_init = 0.0;          // kWh
    double p_max = 5.0;           // kW
    double dt = 0.5;              // hours per interval
    double network_charge = 0.097;  // AUD/kWh on imports

    /// Throws ArgumentError on inconsistent parameters.
    void validate() const;
};

/// Household consumption and solar generation per interval, kWh.
struct ProsumerDay {
    std::vector<double> demand;
    std::vector<double> generation;

    [[nodiscard]] std::size_t horizon() const { return demand.size(); }
};

/// Column layout: eight variables per interval in the order below, followed by slacks.
struct BatteryColumns {
    static constexpr Eigen::Index kPerInterval = 8;
    enum Offset : Eigen::Index { energy, power, charge, discharge, import, export_, charge_on, import_on };
    static Eigen::Index at(std::size_t t, Offset v) { return static_cast<Eigen::Index>(t) * kPerInterval + v; }
};

struct BatteryMilp {
    milp::Problem problem;
    BatteryParams params;
    ProsumerDay day;
    std::vector<double> prices;  // AUD/kWh
    double m_power = 0.0;
    double m_grid = 0.0;

    [[nodiscard]] std::size_t horizon() const { return prices.size(); }
    [[nodiscard]] std::size_t binary_count() const { return problem.integer_columns.size(); }
    [[nodiscard]] std::size_t continuous_count() const { return 6 * horizon(); }
};

/// Expected-cost scheduling problem for one day. Prices are per kWh.
BatteryMilp build_milp(const BatteryParams& params, const ProsumerDay& day, std::span<const double> prices);

struct BatteryPlan {
    std::vector<double> energy, power, charge, discharge, import, export_, charge_on, import_on;
    double objective = 0.0;
    milp::Status status = milp::Status::unknown;
    double gap = 0.0;
    std::size_t nodes = 0;

    [[nodiscard]] std::size_t horizon() const { return energy.size(); }
};

/// Branch and bound on the instance. Throws SolverError when no plan is found.
BatteryPlan solve_battery(const BatteryMilp& instance, const milp::Options& options = {});

struct FeasibilityReport {
    double max_violation = 0.0;
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Checks a plan against the scheduling constraints directly from its values.
FeasibilityReport check_plan(const BatteryParams& params, const ProsumerDay& day, const BatteryPlan& plan,
                             double tol = 1e-6);

/// Sum over intervals of price * (import - export) + network charge * import.
double ground_truth_cost(const BatteryPlan& plan, std::span<const double> prices, double network_charge);

/// Inverse of the piecewise predictive CDF used for CRPS: linear between the nine
/// (level, value) points, flat at the end values outside the outer levels.
double cdf_quantile(std::span<const double> levels, std::span<const double> values, double u);

struct PriceScenarios {
    /// samples[t][s], nondecreasing in s.
    std::vector<std::vector<double>> samples;
    std::vector<double> probability;
    std::vector<double> expected;
};

/// Samples every row's predictive CDF at levels (2s - 1) / (2 n), s = 1..n, each
/// with probability 1/n. Throws ValidationError on crossing quantiles.
PriceScenarios expected_price_from_cdf(const QuantileSurface& surface, std::size_t n_samples = 100);

/// Every `stride`-th value starting at `offset`.
std::vector<double> take_every(std::span<const double> values, std::size_t stride, std::size_t offset = 0);

struct ProsumerRecord {
    Timestamp time{};
    double demand_kwh = 0.0;
    double generation_kwh = 0.0;
};

/// Reads `timestamp,demand_kwh,generation_kwh`. Negative values are validation errors.
std::vector<ProsumerRecord> load_prosumer_csv(const std::filesystem::path& path);

/// Writes a plan with one row per interval.
void write_plan_csv(const std::filesystem::path& path, Timestamp start, std::chrono::seconds step,
                    const BatteryPlan& plan);

}  // namespace epf

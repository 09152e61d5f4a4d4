#include "epf/economic.hpp"

#include "oracles/battery_oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace epf;

namespace {

struct Case {
    BatteryParams params;
    ProsumerDay day;
    std::vector<double> prices;
};

Case from_oracle(const oracle::BatteryInstance& in) {
    Case c;
    c.params.efficiency = in.efficiency;
    c.params.e_max = in.e_max;
    c.params.e_init = in.e_init;
    c.params.p_max = in.p_max;
    c.params.dt = in.dt;
    c.params.network_charge = in.network_charge;
    c.day.demand = in.demand;
    c.day.generation = in.generation;
    c.prices = in.prices;
    return c;
}

milp::Options tight() {
    milp::Options o;
    o.gap_tol = 1e-9;
    return o;
}

}  // namespace

TEST(BuildMilp, VariableCounts) {
    BatteryParams p;
    ProsumerDay day{std::vector<double>(48, 0.4), std::vector<double>(48, 0.1)};
    const auto inst = build_milp(p, day, std::vector<double>(48, 0.08));
    EXPECT_EQ(inst.binary_count(), 96u);
    EXPECT_EQ(inst.continuous_count(), 288u);
    EXPECT_DOUBLE_EQ(inst.m_power, 5.0);
    EXPECT_DOUBLE_EQ(inst.m_grid, 0.5 + 2.5);
}

TEST(BuildMilp, InvalidParameters) {
    BatteryParams p;
    p.e_init = 20.0;
    ProsumerDay day{{0.0}, {0.0}};
    EXPECT_THROW(build_milp(p, day, std::vector<double>{0.1}), ArgumentError);
    BatteryParams ok;
    EXPECT_THROW(build_milp(ok, day, std::vector<double>{0.1, 0.2}), ArgumentError);
}

TEST(SolveBattery, IdleWhenActivityOnlyCosts) {
    BatteryParams p;
    ProsumerDay day{std::vector<double>(12, 0.0), std::vector<double>(12, 0.0)};
    const auto inst = build_milp(p, day, std::vector<double>(12, 0.05));
    const auto plan = solve_battery(inst);
    EXPECT_NEAR(plan.objective, 0.0, 1e-12);
    for (std::size_t t = 0; t < 12; ++t) {
        EXPECT_NEAR(plan.power[t], 0.0, 1e-12);
        EXPECT_NEAR(plan.import[t], 0.0, 1e-12);
    }
    EXPECT_EQ(plan.nodes, 1u);
    EXPECT_TRUE(check_plan(p, day, plan).ok());
}

TEST(SolveBattery, TwoIntervalArbitrage) {
    BatteryParams p;
    p.dt = 1.0;
    p.p_max = 1.0;
    p.e_max = 1.0;
    p.efficiency = 1.0;
    p.network_charge = 0.0;
    ProsumerDay day{{0.0, 0.0}, {0.0, 0.0}};
    const std::vector<double> prices{-10.0, 10.0};
    const auto plan = solve_battery(build_milp(p, day, prices));
    EXPECT_NEAR(plan.objective, -20.0, 1e-9);
    EXPECT_NEAR(plan.charge[0], 1.0, 1e-9);
    EXPECT_NEAR(plan.discharge[1], 1.0, 1e-9);
    oracle::BatteryInstance in{1.0, 1.0, 0.0, 1.0, 1.0, 0.0, {0.0, 0.0}, {0.0, 0.0}, prices};
    EXPECT_NEAR(oracle::battery_dp(in), -20.0, 1e-9);
}

TEST(SolveBattery, MatchesDynamicProgram) {
    for (unsigned seed = 1; seed <= 6; ++seed) {
        const auto in = oracle::grid_instance(seed, 12);
        const auto c = from_oracle(in);
        const auto plan = solve_battery(build_milp(c.params, c.day, c.prices), tight());
        EXPECT_NEAR(plan.objective, oracle::battery_dp(in), 1e-6) << seed;
        const auto rep = check_plan(c.params, c.day, plan);
        EXPECT_TRUE(rep.ok()) << seed << ": " << (rep.ok() ? "" : rep.violations.front());
    }
}

TEST(SolveBattery, NegativePricesNeedBranching) {
    // Negative prices reward wasting energy through simultaneous charge and discharge;
    // the exclusivity binaries must rule that out.
    const auto in = oracle::grid_instance(99, 12);
    auto c = from_oracle(in);
    for (auto& v : c.prices) v = -std::abs(v) - 0.05;
    const auto plan = solve_battery(build_milp(c.params, c.day, c.prices), tight());
    EXPECT_TRUE(check_plan(c.params, c.day, plan).ok());
    auto oin = in;
    oin.prices = c.prices;
    EXPECT_NEAR(plan.objective, oracle::battery_dp(oin), 1e-6);
}

TEST(SolveBattery, PlainRoundingBranchesToOptimum) {
    std::size_t branched = 0;
    for (unsigned seed = 40; seed < 44; ++seed) {
        auto in = oracle::grid_instance(seed, 12);
        for (std::size_t t = 0; t < in.prices.size(); t += 2) in.prices[t] = -std::abs(in.prices[t]) - 0.05;
        const auto c = from_oracle(in);
        const auto inst = build_milp(c.params, c.day, c.prices);
        auto opts = tight();
        opts.propose_assignment = [&](const Eigen::VectorXd& x) {
            std::vector<double> out;
            for (auto col : inst.problem.integer_columns) out.push_back(std::round(x[col]));
            return out;
        };
        const auto plan = solve_battery(inst, opts);
        branched += plan.nodes > 1 ? 1 : 0;
        EXPECT_NEAR(plan.objective, oracle::battery_dp(in), 1e-6) << seed;
        EXPECT_TRUE(check_plan(c.params, c.day, plan).ok()) << seed;
    }
    EXPECT_GT(branched, 0u);
}

TEST(SolveBattery, TighterGapNeverWorse) {
    const auto c = from_oracle(oracle::grid_instance(7, 12));
    const auto inst = build_milp(c.params, c.day, c.prices);
    milp::Options loose;
    loose.gap_tol = 0.5;
    const auto a = solve_battery(inst, loose);
    const auto b = solve_battery(inst, tight());
    EXPECT_LE(b.objective, a.objective + 1e-12);
}

TEST(SolveBattery, FullDayWithDefaultBattery) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BatteryParams p;
    ProsumerDay day;
    std::vector<double> prices;
    for (int t = 0; t < 48; ++t) {
        const double hour = t / 2.0;
        day.demand.push_back(0.3 + 0.4 * u(rng) + (hour > 17 && hour < 21 ? 1.0 : 0.0));
        day.generation.push_back(hour > 7 && hour < 17 ? 2.0 * std::sin((hour - 7) / 10.0 * 3.14159) : 0.0);
        prices.push_back((hour > 10 && hour < 15 ? -0.02 : 0.08) + (hour > 17 && hour < 21 ? 0.25 : 0.0) + 0.02 * u(rng));
    }
    const auto plan = solve_battery(build_milp(p, day, prices));
    EXPECT_EQ(plan.status, milp::Status::optimal);
    const auto rep = check_plan(p, day, plan);
    EXPECT_TRUE(rep.ok()) << (rep.ok() ? "" : rep.violations.front());
    double charged = 0.0;
    for (double ch : plan.charge) charged += ch * p.dt;
    EXPECT_LE(charged, p.e_max + 1e-6);
    EXPECT_NEAR(ground_truth_cost(plan, prices, p.network_charge), plan.objective, 1e-9);
}

TEST(CheckPlan, DetectsViolations) {
    const auto c = from_oracle(oracle::grid_instance(3, 12));
    auto plan = solve_battery(build_milp(c.params, c.day, c.prices), tight());
    ASSERT_TRUE(check_plan(c.params, c.day, plan).ok());
    auto bad = plan;
    bad.energy[5] += 0.01;
    EXPECT_FALSE(check_plan(c.params, c.day, bad).ok());
    bad = plan;
    bad.charge[2] += 0.05;
    bad.discharge[2] += 0.05;
    EXPECT_FALSE(check_plan(c.params, c.day, bad).ok());
    bad = plan;
    bad.import_on[0] = 0.5;
    EXPECT_FALSE(check_plan(c.params, c.day, bad).ok());
}

TEST(GroundTruthCost, Examples) {
    BatteryPlan plan;
    plan.import = {1.0, 0.0, 2.0};
    plan.export_ = {0.0, 3.0, 0.0};
    plan.energy.assign(3, 0.0);
    const std::vector<double> prices{0.10, -0.05, 0.20};
    // 0.1 + 0.097 + 0.15 + 0.4 + 0.194
    EXPECT_NEAR(ground_truth_cost(plan, prices, 0.097), 0.941, 1e-12);

    BatteryPlan idle;
    idle.energy.assign(3, 0.0);
    idle.import.assign(3, 0.0);
    idle.export_.assign(3, 0.0);
    EXPECT_EQ(ground_truth_cost(idle, prices, 0.097), 0.0);
    EXPECT_THROW(ground_truth_cost(plan, std::vector<double>{1.0}, 0.0), ArgumentError);
}

TEST(GroundTruthCost, PerfectInformationIsLowerBound) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.15);
    for (unsigned seed = 20; seed < 24; ++seed) {
        const auto c = from_oracle(oracle::grid_instance(seed, 12));
        auto forecast = c.prices;
        for (auto& v : forecast) v += noise(rng);
        const auto perfect = solve_battery(build_milp(c.params, c.day, c.prices), tight());
        const auto planned = solve_battery(build_milp(c.params, c.day, forecast), tight());
        EXPECT_NEAR(ground_truth_cost(perfect, c.prices, c.params.network_charge), perfect.objective, 1e-9);
        EXPECT_LE(ground_truth_cost(perfect, c.prices, c.params.network_charge),
                  ground_truth_cost(planned, c.prices, c.params.network_charge) + 1e-9);
    }
}

TEST(ExpectedPrice, DegenerateAndNormalized) {
    QuantileSurface s(Timestamp{}, standard_levels(), 2);
    for (auto& v : s.values) v = 64.0;
    const auto sc = expected_price_from_cdf(s);
    ASSERT_EQ(sc.samples.size(), 2u);
    for (double v : sc.samples[0]) EXPECT_EQ(v, 64.0);
    EXPECT_DOUBLE_EQ(sc.expected[1], 64.0);
    for (std::size_t n : {1u, 7u, 100u, 333u}) {
        const auto e = expected_price_from_cdf(s, n);
        double total = 0.0;
        for (double p : e.probability) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(ExpectedPrice, MatchesInverseCdfIntegral) {
    const std::vector<double> values{-20, 5, 18, 40, 55, 71, 120, 180, 400};
    QuantileSurface s(Timestamp{}, standard_levels(), 1);
    for (std::size_t c = 0; c < 9; ++c) s.at(0, c) = values[c];
    const auto& lv = s.levels;
    // Exact integral of the piecewise-linear inverse CDF.
    double exact = lv.front() * values.front() + (1.0 - lv.back()) * values.back();
    for (std::size_t i = 0; i + 1 < 9; ++i) exact += (lv[i + 1] - lv[i]) * 0.5 * (values[i] + values[i + 1]);
    EXPECT_NEAR(expected_price_from_cdf(s, 10000).expected[0], exact, 1e-4);
    // With 100 strata only the two outer kinks fall inside a stratum; the midpoint
    // error there is |slope change| h^2 / 8.
    const double h = 0.01;
    const double bound = ((values[1] - values[0]) / 0.025 + (values[8] - values[7]) / 0.025) * h * h / 8.0;
    const auto sc = expected_price_from_cdf(s, 100);
    EXPECT_LE(std::abs(sc.expected[0] - exact), bound + 1e-12);
    EXPECT_TRUE(std::is_sorted(sc.samples[0].begin(), sc.samples[0].end()));
}

TEST(ExpectedPrice, CrossingRejected) {
    QuantileSurface s(Timestamp{}, standard_levels(), 1);
    for (std::size_t c = 0; c < 9; ++c) s.at(0, c) = static_cast<double>(c);
    s.at(0, 3) = 10.0;
    EXPECT_THROW(expected_price_from_cdf(s), ValidationError);
}

TEST(TakeEvery, HalfHourSampling) {
    std::vector<double> v(288);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const auto h = take_every(v, 6);
    ASSERT_EQ(h.size(), 48u);
    EXPECT_EQ(h[1], 6.0);
    EXPECT_EQ(h[47], 282.0);
}

TEST(ProsumerCsv, LoadAndValidate) {
    epf::testing::TempDir dir("prosumer");
    epf::testing::write_text(dir / "p.csv",
                        "timestamp,demand_kwh,generation_kwh\n2021-01-01 00:00,0.5,0\n2021-01-01 00:30,0.25,0.125\n");
    const auto rows = load_prosumer_csv(dir / "p.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].generation_kwh, 0.125);
    epf::testing::write_text(dir / "bad.csv", "timestamp,demand_kwh,generation_kwh\n2021-01-01 00:00,-0.5,0\n");
    EXPECT_THROW(load_prosumer_csv(dir / "bad.csv"), ValidationError);
}

#include "epf/evaluation.hpp"

#include "oracles/metric_oracle.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace epf;

namespace {

const std::vector<double> kLevels = standard_levels();

std::vector<double> random_quantiles(std::mt19937_64& rng) {
    std::normal_distribution<double> centre(60.0, 40.0);
    std::exponential_distribution<double> gap(0.1);
    std::vector<double> v{centre(rng)};
    for (int i = 1; i < 9; ++i) v.push_back(v.back() + (i == 4 ? 0.0 : gap(rng)));
    return v;
}

QuantileSurface band_surface(std::size_t rows, double lo, double hi) {
    QuantileSurface s(parse_timestamp("2020-01-01 00:00"), kLevels, rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 9; ++c) s.at(r, c) = lo + (hi - lo) * c / 8.0;
    }
    return s;
}

}  // namespace

TEST(Pinball, Examples) {
    EXPECT_EQ(pinball(10, 10, 0.9), 0.0);
    EXPECT_EQ(pinball(10, 6, 0.5), 2.0);
    EXPECT_EQ(pinball(6, 10, 0.25), 3.0);
}

TEST(Pinball, MedianIsHalfMeanAbsoluteError) {
    std::mt19937_64 rng(1);
    std::student_t_distribution<double> t(3.0);
    std::vector<double> y(5000), f(5000);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 80.0 + 50.0 * t(rng);
        f[i] = 75.0 + 20.0 * t(rng);
    }
    const auto ae = abs_error_stats(f, y);
    EXPECT_EQ(mean_pinball(y, f, 0.5), 0.5 * ae.mean);
}

TEST(Crps, AllQuantilesAtObservation) {
    const std::vector<double> v(9, 42.0);
    EXPECT_EQ(crps(kLevels, v, 42.0), 0.0);
}

TEST(Crps, PointMassIdentity) {
    const std::vector<double> v(9, 30.0);
    EXPECT_EQ(crps(kLevels, v, 47.5), 17.5);
    EXPECT_EQ(crps(kLevels, v, -2.25), 32.25);
}

TEST(Crps, MatchesNumericIntegration) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> obs(60.0, 60.0);
    for (int k = 0; k < 50; ++k) {
        const auto v = random_quantiles(rng);
        const double y = obs(rng);
        const double closed = crps(kLevels, v, y);
        const double numeric = oracle::crps_trapezoid(kLevels, v, y, 1e-4);
        EXPECT_NEAR(closed, numeric, 1e-6 * numeric) << k;
        EXPECT_GE(closed, 0.0);
    }
}

TEST(Crps, CrossingRejected) {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::swap(v[2], v[6]);
    EXPECT_THROW(crps(kLevels, v, 4.0), ValidationError);
}

TEST(Crps, MeanSkipsMissing) {
    auto s = band_surface(3, 10.0, 10.0);
    const std::vector<double> y{12.0, std::nan(""), 7.0};
    EXPECT_DOUBLE_EQ(mean_crps(s, y), 2.5);
}

TEST(Picp, AllInsideAndNoneInside) {
    const auto s = band_surface(288, 0.0, 100.0);
    const std::vector<double> inside(288, 50.0), outside(288, 150.0);
    EXPECT_EQ(picp(s, inside, 0.95).rate, 1.0);
    EXPECT_EQ(picp(s, outside, 0.95).rate, 0.0);
    // Boundaries count as inside.
    EXPECT_EQ(picp(s, std::vector<double>(288, 0.0), 0.95).rate, 1.0);
}

TEST(Picp, UsesCentralIntervalLevels) {
    QuantileSurface s(parse_timestamp("2020-01-01 00:00"), kLevels, 1);
    for (std::size_t c = 0; c < 9; ++c) s.at(0, c) = static_cast<double>(c);
    const std::vector<double> y{1.5};  // between the 0.05 and 0.1 values
    EXPECT_EQ(picp(s, y, 0.95).rate, 1.0);
    EXPECT_EQ(picp(s, y, 0.9).rate, 1.0);
    EXPECT_EQ(picp(s, y, 0.8).rate, 0.0);
    EXPECT_EQ(picp(s, y, 0.5).rate, 0.0);
}

TEST(Picp, PeriodBreakdownAggregates) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(50.0, 40.0);
    const auto s = band_surface(288 * 7, 0.0, 100.0);
    std::vector<double> y(s.rows());
    for (auto& v : y) v = z(rng);
    y[17] = std::nan("");
    const auto rep = picp(s, y, 0.95);
    std::size_t hits = 0, total = 0;
    double weighted = 0.0;
    for (std::size_t p = 0; p < 288; ++p) {
        hits += rep.period_hits[p];
        total += rep.period_total[p];
        weighted += rep.period_rate(p) * static_cast<double>(rep.period_total[p]);
    }
    EXPECT_EQ(hits, rep.hits);
    EXPECT_EQ(total, rep.total);
    EXPECT_EQ(total, 288u * 7 - 1);
    EXPECT_NEAR(weighted / static_cast<double>(total), rep.rate, 1e-15);
    EXPECT_EQ(rep.period_total[17], 6u);
}

TEST(ConsistencyBars, Examples) {
    const auto a = consistency_bars(100, 0.5);
    EXPECT_NEAR(a.low, 0.402, 1e-15);
    EXPECT_NEAR(a.high, 0.598, 1e-15);
    const auto b = consistency_bars(1461, 0.95);
    EXPECT_NEAR(b.high - 0.95, 0.0112, 5e-5);
    EXPECT_NEAR(0.95 - b.low, b.high - 0.95, 1e-15);
    const auto c = consistency_bars(400, 0.5), d = consistency_bars(1600, 0.5);
    EXPECT_NEAR((c.high - 0.5) / (d.high - 0.5), 2.0, 1e-12);
}

TEST(DieboldMariano, IdenticalLosses) {
    const std::vector<double> a(100, 3.0);
    const auto r = diebold_mariano(a, a);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 0.5);
}

TEST(DieboldMariano, ConstantPositiveDifferential) {
    const std::vector<double> a(100, 3.0), b(100, 2.0);
    const auto r = diebold_mariano(a, b);
    EXPECT_TRUE(r.variance_floored);
    EXPECT_GT(r.statistic, 0.0);
    EXPECT_LT(r.p_value, 1e-12);
}

TEST(DieboldMariano, MatchesDirectFormula) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t n : {30u, 200u, 3000u}) {
        std::vector<double> a(n), b(n);
        for (std::size_t t = 0; t < n; ++t) {
            a[t] = std::abs(z(rng)) + 0.05;
            b[t] = std::abs(z(rng));
        }
        const auto r = diebold_mariano(a, b);
        const double ref = oracle::dm_statistic(a, b);
        EXPECT_NEAR(r.statistic, ref, 1e-10 * (1.0 + std::abs(ref))) << n;
        EXPECT_EQ(r.lag, static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n)) + 1e-9)));
        EXPECT_NEAR(r.p_value, 0.5 * std::erfc(ref / std::sqrt(2.0)), 1e-12);
    }
}

TEST(DieboldMariano, ShortInputRejected) {
    const std::vector<double> a(29, 1.0);
    EXPECT_THROW(diebold_mariano(a, a), ArgumentError);
}

TEST(Kupiec, ZeroAtNominalRate) {
    const auto r = kupiec_pof(5, 100, 0.05);
    EXPECT_EQ(r.lr, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(Kupiec, NoViolations) {
    const auto r = kupiec_pof(0, 100, 0.05);
    EXPECT_NEAR(r.lr, -2.0 * 100.0 * std::log(0.95), 1e-12);
}

TEST(Kupiec, SymmetricUnderSwap) {
    EXPECT_NEAR(kupiec_pof(13, 250, 0.1).lr, kupiec_pof(237, 250, 0.9).lr, 1e-12);
}

TEST(Kupiec, MatchesHighPrecisionOracle) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + rng() % 5000;
        const std::size_t n1 = rng() % (n + 1);
        const double p = 0.001 + 0.998 * std::uniform_real_distribution<double>()(rng);
        const auto r = kupiec_pof(n1, n, p);
        const double ref = oracle::kupiec_lr(n1, n, p);
        EXPECT_NEAR(r.lr, ref, 1e-9 * (1.0 + ref)) << n << " " << n1 << " " << p;
        if (ref > 1e-6) {
            const double pv = boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), ref));
            EXPECT_NEAR(r.p_value, pv, 1e-9 + 1e-6 * pv);
        }
    }
}

TEST(SummaryStats, SmallExample) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto s = summary_stats(x);
    EXPECT_EQ(s.mean, 3.0);
    EXPECT_EQ(s.median, 3.0);
    EXPECT_EQ(s.mad, 1.0);
    EXPECT_DOUBLE_EQ(s.sd, std::sqrt(2.5));
    EXPECT_EQ(s.skew, 0.0);
    EXPECT_DOUBLE_EQ(s.kurtosis, 1.7);  // m4 = 6.8, m2 = 2
}

TEST(SummaryStats, SymmetricHasZeroSkew) {
    std::vector<double> x;
    for (int i = -50; i <= 50; ++i) x.push_back(i * i * (i < 0 ? -1.0 : 1.0));
    EXPECT_NEAR(summary_stats(x).skew, 0.0, 1e-12);
}

TEST(SummaryStats, EvenCountMedianAndMissing) {
    const std::vector<double> x{4, std::nan(""), 1, 3, 2};
    const auto s = summary_stats(x);
    EXPECT_EQ(s.n, 4u);
    EXPECT_EQ(s.median, 2.5);
    EXPECT_EQ(s.mad, 1.0);
    EXPECT_THROW(summary_stats(std::vector<double>{1.0}), ArgumentError);
}

TEST(AbsErrorStats, PerfectAndBiased) {
    const std::vector<double> y{1, 5, 9, 2};
    const auto p = abs_error_stats(y, y);
    EXPECT_EQ(p.mean, 0.0);
    EXPECT_EQ(p.median, 0.0);
    std::vector<double> f = y;
    for (auto& v : f) v -= 3.5;
    const auto b = abs_error_stats(f, y);
    EXPECT_EQ(b.mean, 3.5);
    EXPECT_EQ(b.median, 3.5);
}

TEST(EvaluateForecast, ReportShape) {
    const auto s = band_surface(288, 0.0, 80.0);
    const std::vector<double> y(288, 40.0);
    const auto rep = evaluate_forecast(s, y);
    EXPECT_EQ(rep.mean_pinball.size(), 9u);
    EXPECT_EQ(rep.mean_pinball[kMedianIndex], 0.0);
    ASSERT_EQ(rep.picp.size(), 4u);
    for (const auto& p : rep.picp) EXPECT_EQ(p.rate, 1.0);
    EXPECT_EQ(rep.observed, 288u);
}

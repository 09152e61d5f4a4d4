#include "epf/spike_filter.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace epf;
using epf::testing::make_series;

namespace {

const Timestamp kStart = parse_timestamp("2017-01-01 00:00");

// Independent quantile: copy, sort, interpolate at (n-1)*level.
double sorted_window_quantile(std::vector<double> w, double level) {
    std::sort(w.begin(), w.end());
    const double pos = level * static_cast<double>(w.size() - 1);
    const double lower = std::floor(pos);
    const auto i = static_cast<std::size_t>(lower);
    if (i + 1 >= w.size()) return w.back();
    return w[i] * (1.0 - (pos - lower)) + w[i + 1] * (pos - lower);
}

std::vector<SpikeLabel> labels_from(std::initializer_list<int> flags) {
    std::vector<SpikeLabel> out;
    for (int f : flags) out.push_back(f ? SpikeLabel::positive : SpikeLabel::none);
    return out;
}

std::vector<double> base_prices(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(20.0, 60.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(RollingQuantile, MedianOfOneToHundred) {
    std::vector<double> s;
    for (int i = 1; i <= 101; ++i) s.push_back(i);
    const auto q = rolling_quantile(s, 100, 0.5);
    EXPECT_TRUE(std::isnan(q[99]));
    EXPECT_DOUBLE_EQ(q[100], 50.5);
}

TEST(RollingQuantile, ConstantWindow) {
    const std::vector<double> s(50, 7.25);
    for (double level : {0.025, 0.5, 0.975}) {
        const auto q = rolling_quantile(s, 20, level);
        for (std::size_t t = 20; t < s.size(); ++t) EXPECT_EQ(q[t], 7.25);
    }
}

TEST(RollingQuantile, MatchesSortOracleOnRandomWindow) {
    std::mt19937_64 rng(11);
    std::student_t_distribution<double> heavy(3.0);
    std::vector<double> s(3000);
    for (auto& x : s) x = 50.0 + 30.0 * heavy(rng);
    const std::size_t w = 1000;
    for (double level : {0.025, 0.975}) {
        const auto q = rolling_quantile(s, w, level);
        for (std::size_t t = w; t < s.size(); t += 97) {
            const std::vector<double> window(s.begin() + static_cast<long>(t - w), s.begin() + static_cast<long>(t));
            EXPECT_NEAR(q[t], sorted_window_quantile(window, level), 1e-12) << "t=" << t;
        }
    }
}

TEST(RollingQuantile, ExcludesCurrentObservation) {
    std::vector<double> s{1, 2, 3, 4, 1000};
    const auto q = rolling_quantile(s, 4, 1.0 - 1e-12);
    EXPECT_NEAR(q[4], 4.0, 1e-9);
}

TEST(RollingQuantile, TypeSevenDirect) {
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(type7_quantile(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(type7_quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(type7_quantile(v, 1.0), 4.0);
}

TEST(ClassifyPrice, RuleExamples) {
    EXPECT_EQ(classify_price(50, 100, 40, -50, -70), SpikeLabel::none);
    EXPECT_EQ(classify_price(150, 100, 40, -50, -70), SpikeLabel::positive);
    EXPECT_EQ(classify_price(-80, 100, 40, -50, -70), SpikeLabel::negative);
    EXPECT_EQ(classify_price(-55, 100, 40, -50, -70), SpikeLabel::none);
    EXPECT_EQ(classify_price(1e6, std::nan(""), 40, -50, -70), SpikeLabel::none);
}

TEST(ClassifyPrice, RaisingAboveThresholdFlipsPositive) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 200.0);
    for (int k = 0; k < 200; ++k) {
        const double qa = u(rng), qm = u(rng);
        const double y = qa + qm + 1e-9 * (1.0 + qa + qm) + u(rng);
        EXPECT_EQ(classify_price(y, qa, qm, -10, -10), SpikeLabel::positive);
    }
}

TEST(ImputeNeighbor, Examples) {
    const auto s1 = make_series(kStart, {10, 999, 30});
    EXPECT_EQ(impute_neighbor(s1, labels_from({0, 1, 0})).values, (std::vector<double>{10, 10, 30}));
    const auto s2 = make_series(kStart, {10, 999, 998, 40});
    EXPECT_EQ(impute_neighbor(s2, labels_from({0, 1, 1, 0})).values, (std::vector<double>{10, 10, 10, 40}));
    const auto s3 = make_series(kStart, {999, 7, 9});
    EXPECT_EQ(impute_neighbor(s3, labels_from({1, 0, 0})).values, (std::vector<double>{7, 7, 9}));
}

TEST(ImputeNeighbor, MisalignedLabelsRejected) {
    const auto s = make_series(kStart, {1, 2, 3});
    EXPECT_THROW(impute_neighbor(s, labels_from({0, 1})), ArgumentError);
}

TEST(SpikeConfig, Validation) {
    SpikeConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lower_level = 0.98;
    EXPECT_THROW(c.validate(), ArgumentError);
}

class PlantedSpikes : public ::testing::Test {
protected:
    void SetUp() override {
        cfg.annual_days = 4;
        cfg.monthly_days = 1;
        const std::size_t n = 288 * 12;
        auto v = base_prices(n, 21);
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<std::size_t> pos(288 * 4, n - 1);
        // 0.3% planted spikes: far beyond any attainable sum of upper thresholds.
        for (int k = 0; k < 10; ++k) {
            const auto t = pos(rng);
            v[t] = 5000.0 + static_cast<double>(k);
            planted_pos.push_back(t);
        }
        for (int k = 0; k < 5; ++k) {
            const auto t = pos(rng);
            v[t] = -900.0;
            planted_neg.push_back(t);
        }
        raw = make_series(kStart, v);
    }

    SpikeConfig cfg;
    PriceSeries raw;
    std::vector<std::size_t> planted_pos, planted_neg;
};

TEST_F(PlantedSpikes, RecallIsOne) {
    const auto mask = filter_spikes(raw, cfg);
    for (auto t : planted_pos) EXPECT_EQ(mask.labels[t], SpikeLabel::positive) << t;
    for (auto t : planted_neg) EXPECT_EQ(mask.labels[t], SpikeLabel::negative) << t;
}

TEST_F(PlantedSpikes, NoLabelsBeforeAnnualWindow) {
    const auto labels = classify_spikes(raw, cfg);
    for (std::size_t t = 0; t < 288 * 4; ++t) EXPECT_EQ(labels[t], SpikeLabel::none);
}

TEST_F(PlantedSpikes, MaskInvariants) {
    for (auto source : {ThresholdSource::raw, ThresholdSource::imputed}) {
        cfg.source = source;
        const auto mask = filter_spikes(raw, cfg);
        for (std::size_t t = 0; t < raw.size(); ++t) {
            if (mask.labels[t] == SpikeLabel::none) {
                EXPECT_EQ(mask.imputed.values[t], raw.values[t]);
            } else {
                EXPECT_GT(std::abs(mask.imputed.values[t] - raw.values[t]), 0.0);
                EXPECT_LT(std::abs(mask.imputed.values[t]), 100.0);
            }
        }
    }
}

TEST_F(PlantedSpikes, ClassifyThenImputeAgreesWithFilter) {
    const auto labels = classify_spikes(raw, cfg);
    const auto imputed = impute_neighbor(raw, labels);
    const auto mask = filter_spikes(raw, cfg);
    EXPECT_EQ(labels, mask.labels);
    EXPECT_EQ(imputed.values, mask.imputed.values);
}

// Under the thresholds computed from the raw series, the imputed series has no spikes.
TEST_F(PlantedSpikes, ImputedSeriesIsClean) {
    const auto mask = filter_spikes(raw, cfg);
    const std::size_t wa = cfg.annual_days * 288, wm = cfg.monthly_days * 288;
    const auto ua = rolling_quantile(raw.values, wa, cfg.upper_level);
    const auto um = rolling_quantile(raw.values, wm, cfg.upper_level);
    const auto la = rolling_quantile(raw.values, wa, cfg.lower_level);
    const auto lm = rolling_quantile(raw.values, wm, cfg.lower_level);
    for (std::size_t t = wa; t < raw.size(); ++t) {
        EXPECT_EQ(classify_price(mask.imputed.values[t], ua[t], um[t], la[t], lm[t]), SpikeLabel::none) << t;
    }
}

TEST_F(PlantedSpikes, ThresholdsMatchRollingQuantiles) {
    const std::size_t wa = cfg.annual_days * 288, wm = cfg.monthly_days * 288;
    const auto ua = rolling_quantile(raw.values, wa, cfg.upper_level);
    const auto um = rolling_quantile(raw.values, wm, cfg.upper_level);
    const auto la = rolling_quantile(raw.values, wa, cfg.lower_level);
    const auto lm = rolling_quantile(raw.values, wm, cfg.lower_level);
    const auto labels = classify_spikes(raw, cfg);
    for (std::size_t t = wa; t < raw.size(); ++t) {
        EXPECT_EQ(labels[t], classify_price(raw.values[t], ua[t], um[t], la[t], lm[t]));
    }
}

TEST(FilterSpikes, MissingValuesStayMissing) {
    auto v = base_prices(288 * 3, 4);
    v[288 * 2 + 5] = std::nan("");
    SpikeConfig cfg;
    cfg.annual_days = 2;
    cfg.monthly_days = 1;
    const auto mask = filter_spikes(make_series(kStart, v), cfg);
    EXPECT_EQ(mask.labels[288 * 2 + 5], SpikeLabel::none);
    EXPECT_TRUE(std::isnan(mask.imputed.values[288 * 2 + 5]));
}

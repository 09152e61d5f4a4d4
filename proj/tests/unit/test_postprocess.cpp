#include "epf/postprocess.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace epf;

namespace {

QuantileSurface surface_from(const std::vector<std::vector<double>>& rows) {
    QuantileSurface s(Timestamp{}, standard_levels(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < s.cols(); ++c) s.at(r, c) = rows[r][c];
    }
    return s;
}

// Plain convolution with the 13-tap kernel, interior points only.
double direct_ma(const std::vector<double>& y, std::size_t t) {
    double s = (y[t - 6] + y[t + 6]) / 24.0;
    for (std::size_t k = t - 5; k <= t + 5; ++k) s += y[k] / 12.0;
    return s;
}

}  // namespace

TEST(CenteredMa, Weights) {
    const auto w = centered_ma_weights(12);
    ASSERT_EQ(w.size(), 13u);
    EXPECT_DOUBLE_EQ(w.front(), 1.0 / 24.0);
    EXPECT_DOUBLE_EQ(w.back(), 1.0 / 24.0);
    EXPECT_DOUBLE_EQ(w[6], 1.0 / 12.0);
    double total = 0.0;
    for (double v : w) total += v;
    EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(CenteredMa, OddOrderRejected) {
    EXPECT_THROW(centered_ma_weights(11), ArgumentError);
    EXPECT_THROW(centered_ma_weights(0), ArgumentError);
}

TEST(CenteredMa, ConstantSeriesUnchanged) {
    const std::vector<double> y(40, 37.25);
    for (double v : smooth_series(y, 12)) EXPECT_NEAR(v, 37.25, 1e-12);
}

TEST(CenteredMa, ImpulseReproducesKernel) {
    std::vector<double> y(41, 0.0);
    y[20] = 1.0;
    const auto s = smooth_series(y, 12);
    const auto w = centered_ma_weights(12);
    for (std::size_t t = 0; t < y.size(); ++t) {
        const long off = static_cast<long>(t) - 20;
        const double expected = std::abs(off) <= 6 ? w[static_cast<std::size_t>(off + 6)] : 0.0;
        EXPECT_DOUBLE_EQ(s[t], expected) << t;
    }
}

TEST(CenteredMa, InteriorMatchesDirectConvolution) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(50.0, 20.0);
    std::vector<double> y(288);
    for (auto& v : y) v = z(rng);
    const auto s = smooth_series(y, 12);
    for (std::size_t t = 6; t + 6 < y.size(); ++t) EXPECT_NEAR(s[t], direct_ma(y, t), 1e-11) << t;
}

TEST(CenteredMa, EdgesRenormalized) {
    const std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    const auto s = smooth_series(y, 12);
    // t = 0 sees offsets 0..6 with weights 1/12 x6 and 1/24.
    const double num = (1 + 2 + 3 + 4 + 5 + 6) / 12.0 + 7 / 24.0;
    const double den = 6 / 12.0 + 1 / 24.0;
    EXPECT_NEAR(s[0], num / den, 1e-12);
}

TEST(CenteredMa, Linearity) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    std::vector<double> a(100), b(100), c(100);
    for (std::size_t i = 0; i < 100; ++i) {
        a[i] = z(rng);
        b[i] = z(rng);
        c[i] = 2.5 * a[i] - 0.75 * b[i];
    }
    const auto sa = smooth_series(a, 12), sb = smooth_series(b, 12), sc = smooth_series(c, 12);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(sc[i], 2.5 * sa[i] - 0.75 * sb[i], 1e-12);
}

TEST(CenteredMa, SurfaceBlocksAreIndependent) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 2 * kIntervalsPerDay; ++r) rows.emplace_back(9, r < kIntervalsPerDay ? 10.0 : 90.0);
    const auto s = smooth_centered_ma(surface_from(rows));
    EXPECT_DOUBLE_EQ(s.at(kIntervalsPerDay - 1, 0), 10.0);
    EXPECT_DOUBLE_EQ(s.at(kIntervalsPerDay, 8), 90.0);
    const auto joined = smooth_centered_ma(surface_from(rows), 12, 0);
    EXPECT_GT(joined.at(kIntervalsPerDay - 1, 0), 10.0);
}

TEST(FitAr, ZeroResidualsGiveZeroCoefficients) {
    const std::vector<double> e(100, 0.0);
    const auto m = fit_ar_residual(e, 2);
    EXPECT_EQ(m.phi, (std::vector<double>{0.0, 0.0}));
}

TEST(FitAr, NoiselessRecursion) {
    std::vector<double> e{64.0};
    for (int i = 0; i < 30; ++i) e.push_back(0.5 * e.back());
    const auto m = fit_ar_residual(e, 1);
    EXPECT_NEAR(m.phi[0], 0.5, 1e-12);
    EXPECT_TRUE(m.stable());
}

TEST(FitAr, SimulatedAr1Consistency) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    std::vector<double> e{0.0};
    for (int i = 1; i < 10000; ++i) e.push_back(0.7 * e.back() + z(rng));
    const auto m = fit_ar_residual(e, 1);
    EXPECT_NEAR(m.phi[0], 0.7, 0.02);
}

TEST(FitAr, TooShortOrSingular) {
    EXPECT_THROW(fit_ar_residual(std::vector<double>(19, 1.0), 2), ArgumentError);
    // A constant series makes the two lags collinear.
    EXPECT_THROW(fit_ar_residual(std::vector<double>(50, 1.0), 2), ValidationError);
}

TEST(FitAr, SkipsMissingValues) {
    std::vector<double> e{10.0};
    for (int i = 0; i < 40; ++i) e.push_back(-0.8 * e.back());
    e[20] = std::nan("");
    const auto m = fit_ar_residual(e, 1);
    EXPECT_NEAR(m.phi[0], -0.8, 1e-12);
}

TEST(SpectralRadius, KnownRoots) {
    // (1 - 0.5L)(1 - 0.4L) = 1 - 0.9L + 0.2L^2
    EXPECT_NEAR(companion_spectral_radius(std::vector<double>{0.9, -0.2}), 0.5, 1e-12);
    EXPECT_NEAR(companion_spectral_radius(std::vector<double>{1.1}), 1.1, 1e-12);
}

TEST(ShiftQuantiles, GeometricShifts) {
    ArModel m{{0.5}, 0.5};
    const auto shift = ar_forecast(m, std::vector<double>{8.0}, 3);
    EXPECT_EQ(shift, (std::vector<double>{4.0, 2.0, 1.0}));

    const auto s = surface_from(std::vector<std::vector<double>>(3, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
    const auto p = shift_quantiles(s, m, std::vector<double>{8.0});
    for (std::size_t c = 0; c < 9; ++c) {
        EXPECT_EQ(p.at(0, c), s.at(0, c) + 4.0);
        EXPECT_EQ(p.at(2, c), s.at(2, c) + 1.0);
    }
}

TEST(ShiftQuantiles, ZeroModelIsIdentity) {
    ArModel m{{0.0, 0.0}, 0.0};
    const auto s = surface_from(std::vector<std::vector<double>>(5, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
    const auto p = shift_quantiles(s, m, std::vector<double>{3.0, -7.0});
    EXPECT_EQ(p.values, s.values);
}

TEST(ShiftQuantiles, Ar2MatchesManualRecursion) {
    const ArModel m{{0.6, 0.25}, companion_spectral_radius(std::vector<double>{0.6, 0.25})};
    const std::vector<double> anchor{-3.0, 5.0};  // e_{tau-1}, e_tau
    double e2 = -3.0, e1 = 5.0;
    std::vector<double> manual;
    for (int k = 0; k < 288; ++k) {
        const double e0 = 0.6 * e1 + 0.25 * e2;
        manual.push_back(e0);
        e2 = e1;
        e1 = e0;
    }
    const auto shift = ar_forecast(m, anchor, 288);
    for (std::size_t k = 0; k < 288; ++k) EXPECT_DOUBLE_EQ(shift[k], manual[k]) << k;
    EXPECT_LE(std::abs(shift[287]), std::abs(shift[0]));
}

TEST(ShiftQuantiles, SpacingPreservedUpToRounding) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 30.0);
    QuantileSurface s(Timestamp{}, standard_levels(), kIntervalsPerDay);
    for (std::size_t r = 0; r < s.rows(); ++r) {
        double v = z(rng);
        for (std::size_t c = 0; c < 9; ++c) s.at(r, c) = (v += std::abs(z(rng)));
    }
    const ArModel m{{0.9, -0.1}, companion_spectral_radius(std::vector<double>{0.9, -0.1})};
    const auto p = shift_quantiles(s, m, std::vector<double>{12.0, -40.0});
    for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t c = 1; c < 9; ++c) {
            const double scale = std::abs(p.at(r, c)) + std::abs(p.at(r, 0)) + 1.0;
            EXPECT_NEAR(p.at(r, c) - p.at(r, 0), s.at(r, c) - s.at(r, 0), 2e-15 * scale);
        }
    }
}

TEST(ShiftQuantiles, UnstableModelWarnsAndStillShifts) {
    const ArModel m{{1.2}, 1.2};
    const auto s = surface_from(std::vector<std::vector<double>>(2, std::vector<double>(9, 0.0)));
    std::vector<std::string> warnings;
    const auto p = shift_quantiles(s, m, std::vector<double>{1.0}, &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("not stable"), std::string::npos);
    EXPECT_DOUBLE_EQ(p.at(1, 4), 1.44);
}

#include "epf/ensemble.hpp"

#include "oracles/qr_oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace epf;

namespace {

const Timestamp kStart = parse_timestamp("2021-03-01 00:00");

// Synthetic constituent: a noisy version of the target with a spread of quantiles.
QuantileSurface noisy_surface(const std::vector<double>& y, double bias, double noise, double spread,
                              std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, noise);
    QuantileSurface s(kStart, standard_levels(), y.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double centre = y[r] + bias + z(rng);
        for (std::size_t c = 0; c < 9; ++c) s.at(r, c) = centre + spread * (kQuantileLevels[c] - 0.5) * 4.0;
    }
    return s;
}

struct Fixture {
    std::vector<double> y;
    ConstituentSet set;
};

Fixture make_fixture(std::size_t n, std::size_t constituents, bool with_point, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 15.0);
    Fixture f;
    for (std::size_t i = 0; i < n; ++i) f.y.push_back(80.0 + 30.0 * std::sin(i / 20.0) + z(rng));
    for (std::size_t k = 0; k < constituents; ++k) {
        f.set.ids.push_back("m" + std::to_string(k));
        f.set.surfaces.push_back(noisy_surface(f.y, 3.0 * k - 4.0, 5.0 + 3.0 * k, 10.0 + k, rng));
    }
    if (with_point) {
        f.set.point_id = "svr";
        std::normal_distribution<double> e(0.0, 8.0);
        for (double v : f.y) f.set.point.push_back(v + e(rng));
    }
    return f;
}

// Shrinking-box grid search over (intercept, slope).
double zoom_grid_min(const Eigen::MatrixXd& X, const std::vector<double>& y, double q) {
    double lo0 = -200, hi0 = 200, lo1 = -3, hi1 = 3;
    double best = 0.0;
    const int steps = 100;
    for (int round = 0; round < 30; ++round) {
        best = std::numeric_limits<double>::infinity();
        double b0 = 0, b1 = 0;
        Eigen::VectorXd beta(2);
        for (int a = 0; a <= steps; ++a) {
            for (int c = 0; c <= steps; ++c) {
                beta << lo0 + (hi0 - lo0) * a / steps, lo1 + (hi1 - lo1) * c / steps;
                const double v = oracle::linear_objective(X, y, beta, q);
                if (v < best) {
                    best = v;
                    b0 = beta[0];
                    b1 = beta[1];
                }
            }
        }
        const double w0 = (hi0 - lo0) * 4 / steps, w1 = (hi1 - lo1) * 4 / steps;
        lo0 = b0 - w0;
        hi0 = b0 + w0;
        lo1 = b1 - w1;
        hi1 = b1 + w1;
    }
    return best;
}

}  // namespace

TEST(AssembleInputs, Widths) {
    const auto one = make_fixture(40, 1, false, 1);
    EXPECT_EQ(assemble_inputs(EnsembleKind::qqra, one.set, 0.1).cols(), 2);
    const auto five = make_fixture(40, 4, true, 2);
    EXPECT_EQ(assemble_inputs(EnsembleKind::qqra, five.set, 0.1).cols(), 6);
    EXPECT_EQ(assemble_inputs(EnsembleKind::qra, five.set, 0.1).cols(), 6);
    EXPECT_EQ(input_manifest(EnsembleKind::qqra, five.set).back(), "svr:point");
}

TEST(AssembleInputs, ColumnContents) {
    const auto f = make_fixture(30, 2, true, 3);
    const auto qra = assemble_inputs(EnsembleKind::qra, f.set, 0.95);
    const auto qq = assemble_inputs(EnsembleKind::qqra, f.set, 0.95);
    const auto i95 = f.set.surfaces[0].level_index(0.95);
    for (Eigen::Index r = 0; r < 30; ++r) {
        const auto row = static_cast<std::size_t>(r);
        EXPECT_EQ(qra(r, 0), 1.0);
        EXPECT_EQ(qra(r, 1), f.set.surfaces[0].at(row, kMedianIndex));
        EXPECT_EQ(qq(r, 2), f.set.surfaces[1].at(row, i95));
        EXPECT_EQ(qq(r, 3), f.set.point[row]);
    }
}

TEST(AssembleInputs, MedianRowsIdenticalAcrossKinds) {
    const auto f = make_fixture(50, 4, true, 4);
    EXPECT_EQ(assemble_inputs(EnsembleKind::qra, f.set, 0.5), assemble_inputs(EnsembleKind::qqra, f.set, 0.5));
    const auto qra = fit_ensemble(EnsembleKind::qra, f.set, f.y);
    const auto qq = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    const auto pa = predict_ensemble_raw(qra, f.set), pb = predict_ensemble_raw(qq, f.set);
    for (std::size_t r = 0; r < pa.rows(); ++r) EXPECT_EQ(pa.at(r, kMedianIndex), pb.at(r, kMedianIndex));
}

TEST(AssembleInputs, MisalignedTimestampsNamed) {
    auto f = make_fixture(30, 3, true, 5);
    f.set.surfaces[2].start += kStep;
    try {
        assemble_inputs(EnsembleKind::qqra, f.set, 0.5);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("m2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("2021-03-01 00:05:00"), std::string::npos);
    }
    auto g = make_fixture(30, 1, true, 6);
    g.set.point.pop_back();
    EXPECT_THROW(assemble_inputs(EnsembleKind::qqra, g.set, 0.5), ValidationError);
}

TEST(FitEnsemble, PerfectRegressor) {
    Fixture f = make_fixture(40, 1, false, 7);
    for (std::size_t r = 0; r < 40; ++r) {
        for (std::size_t c = 0; c < 9; ++c) f.set.surfaces[0].at(r, c) = f.y[r];
    }
    const auto m = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    for (const auto& l : m.levels) {
        EXPECT_NEAR(l.coefficients[0], 0.0, 1e-9);
        EXPECT_NEAR(l.coefficients[1], 1.0, 1e-12);
        EXPECT_NEAR(l.objective, 0.0, 1e-9);
    }
}

TEST(FitEnsemble, MatchesGridOracle) {
    const auto f = make_fixture(60, 1, false, 8);
    for (double q : {0.05, 0.5, 0.9}) {
        const auto m = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
        const auto& l = m.levels[f.set.surfaces[0].level_index(q)];
        const Eigen::MatrixXd X = assemble_inputs(EnsembleKind::qqra, f.set, q);
        const double ref = zoom_grid_min(X, f.y, q);
        EXPECT_NEAR(l.objective, ref, 1e-6 * (1.0 + ref)) << q;
        EXPECT_LE(l.objective, ref + 1e-9) << q;
    }
}

TEST(FitEnsemble, MatchesVertexEnumeration) {
    const auto f = make_fixture(16, 1, true, 9);
    const auto m = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    for (const auto& l : m.levels) {
        const Eigen::MatrixXd X = assemble_inputs(EnsembleKind::qqra, f.set, l.level);
        EXPECT_NEAR(l.objective, oracle::subset_enumeration_min(X, f.y, l.level), 1e-8) << l.level;
    }
}

TEST(FitEnsemble, InSampleDominance) {
    for (unsigned seed : {10u, 11u, 12u}) {
        const auto f = make_fixture(35 * 48, 4, true, seed);
        for (auto kind : {EnsembleKind::qra, EnsembleKind::qqra}) {
            const auto m = fit_ensemble(kind, f.set, f.y);
            for (const auto& l : m.levels) {
                const auto X = assemble_inputs(kind, f.set, l.level);
                for (Eigen::Index c = 1; c < X.cols(); ++c) {
                    std::vector<double> fitted(X.rows());
                    for (Eigen::Index r = 0; r < X.rows(); ++r) fitted[r] = X(r, c);
                    EXPECT_LE(l.objective, pinball_sum(f.y, fitted, l.level) + 1e-8);
                }
            }
        }
    }
}

TEST(FitEnsemble, LevelsAreIndependent) {
    const auto f = make_fixture(80, 2, true, 13);
    const auto full = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    auto reduced = f;
    for (auto& s : reduced.set.surfaces) {
        for (std::size_t r = 0; r < s.rows(); ++r) s.at(r, 0) = -1000.0 + r;  // scramble the 0.025 column only
    }
    const auto other = fit_ensemble(EnsembleKind::qqra, reduced.set, f.y);
    for (std::size_t c = 1; c < 9; ++c) EXPECT_EQ(full.levels[c].coefficients, other.levels[c].coefficients);
}

TEST(FitEnsemble, MissingTargetsDropped) {
    auto f = make_fixture(50, 2, true, 14);
    auto y = f.y;
    y[7] = std::nan("");
    const auto m = fit_ensemble(EnsembleKind::qqra, f.set, y);
    EXPECT_EQ(m.levels[0].rows_used, 49u);
    auto tiny = make_fixture(3, 3, true, 15);
    EXPECT_THROW(fit_ensemble(EnsembleKind::qqra, tiny.set, tiny.y), ArgumentError);
}

TEST(PredictEnsemble, PassthroughAndConstant) {
    const auto f = make_fixture(20, 3, true, 16);
    EnsembleModel m;
    m.kind = EnsembleKind::qqra;
    m.manifest = input_manifest(m.kind, f.set);
    for (double q : kQuantileLevels) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
        b[1] = 1.0;
        m.levels.push_back({q, b, 0.0, 0});
    }
    const auto pass = predict_ensemble(m, f.set);
    EXPECT_EQ(pass.values, f.set.surfaces[0].values);

    for (auto& l : m.levels) {
        l.coefficients.setZero();
        l.coefficients[0] = 42.5;
    }
    for (double v : predict_ensemble(m, f.set).values) EXPECT_EQ(v, 42.5);
}

TEST(PredictEnsemble, MatchesDotProducts) {
    const auto f = make_fixture(30, 2, true, 17);
    const auto m = fit_ensemble(EnsembleKind::qra, f.set, f.y);
    const auto p = predict_ensemble_raw(m, f.set);
    for (std::size_t r = 0; r < 30; ++r) {
        for (std::size_t c = 0; c < 9; ++c) {
            const auto& b = m.levels[c].coefficients;
            const double ref = b[0] + b[1] * f.set.surfaces[0].at(r, kMedianIndex) +
                               b[2] * f.set.surfaces[1].at(r, kMedianIndex) + b[3] * f.set.point[r];
            EXPECT_NEAR(p.at(r, c), ref, 1e-9 * (1.0 + std::abs(ref)));
        }
    }
}

TEST(PredictEnsemble, ManifestMismatch) {
    const auto f = make_fixture(30, 2, true, 18);
    const auto m = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    auto g = f;
    g.set.ids[1] = "other";
    EXPECT_THROW(predict_ensemble(m, g.set), ValidationError);
}

TEST(PredictEnsemble, RearrangedMonotoneAndNoWorse) {
    const auto f = make_fixture(200, 3, true, 19);
    const auto m = fit_ensemble(EnsembleKind::qqra, f.set, f.y);
    auto raw = predict_ensemble_raw(m, f.set);
    // Force some crossing.
    for (std::size_t r = 0; r < raw.rows(); r += 3) std::swap(raw.at(r, 1), raw.at(r, 7));
    auto sorted = raw;
    rearrange(sorted);
    double raw_total = 0.0, sorted_total = 0.0;
    for (std::size_t r = 0; r < sorted.rows(); ++r) {
        EXPECT_TRUE(std::is_sorted(sorted.row(r).begin(), sorted.row(r).end()));
        for (std::size_t c = 0; c < 9; ++c) {
            raw_total += oracle::check_loss(f.y[r] - raw.at(r, c), kQuantileLevels[c]);
            sorted_total += oracle::check_loss(f.y[r] - sorted.at(r, c), kQuantileLevels[c]);
        }
    }
    EXPECT_LE(sorted_total, raw_total + 1e-9);
}

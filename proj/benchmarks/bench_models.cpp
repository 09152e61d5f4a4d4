#include "epf/evaluation.hpp"
#include "epf/linear_qr.hpp"
#include "epf/qrf.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

struct Design {
    epf::RowMatrix X;
    std::vector<double> y;
};

Design make_design(Eigen::Index n, Eigen::Index p, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::student_t_distribution<double> noise(3.0);
    Design d{epf::RowMatrix(n, p), std::vector<double>(static_cast<std::size_t>(n))};
    for (Eigen::Index i = 0; i < n; ++i) {
        d.X(i, 0) = 1.0;
        double mean = 0.0;
        for (Eigen::Index k = 1; k < p; ++k) {
            d.X(i, k) = z(rng);
            mean += d.X(i, k) / static_cast<double>(k);
        }
        d.y[static_cast<std::size_t>(i)] = 50.0 + 10.0 * mean + 5.0 * noise(rng);
    }
    return d;
}

void BM_FitQr(benchmark::State& state) {
    const auto d = make_design(state.range(0), 10, 1);
    for (auto _ : state) benchmark::DoNotOptimize(epf::fit_qr(d.X, d.y, 0.9).objective);
}
BENCHMARK(BM_FitQr)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_FitForest(benchmark::State& state) {
    const auto d = make_design(state.range(0), 12, 2);
    epf::ForestParams p;
    p.n_trees = 50;
    for (auto _ : state) benchmark::DoNotOptimize(epf::fit_forest(d.X, d.y, p, 3).trees.size());
}
BENCHMARK(BM_FitForest)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_ForestQuantiles(benchmark::State& state) {
    const auto d = make_design(4000, 12, 4);
    epf::ForestParams p;
    p.n_trees = 100;
    const auto forest = epf::fit_forest(d.X, d.y, p, 5);
    const auto levels = epf::standard_levels();
    Eigen::Index row = 0;
    for (auto _ : state) {
        const std::vector<double> x(d.X.row(row).data(), d.X.row(row).data() + d.X.cols());
        benchmark::DoNotOptimize(epf::predict_quantiles(forest, x, levels));
        row = (row + 1) % d.X.rows();
    }
}
BENCHMARK(BM_ForestQuantiles)->Unit(benchmark::kMicrosecond);

void BM_Crps(benchmark::State& state) {
    const auto levels = epf::standard_levels();
    const std::vector<double> values{10, 20, 35, 50, 60, 70, 90, 120, 160};
    double y = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(epf::crps(levels, values, y));
        y = y > 200.0 ? 0.0 : y + 1.7;
    }
}
BENCHMARK(BM_Crps);

}  // namespace

BENCHMARK_MAIN();

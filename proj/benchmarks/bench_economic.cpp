#include "epf/economic.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

namespace {

void BM_SolveBattery(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    epf::ProsumerDay day;
    std::vector<double> prices(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double hour = 24.0 * static_cast<double>(t) / static_cast<double>(n);
        day.demand.push_back(0.3 + 0.4 * u(rng));
        day.generation.push_back(std::max(0.0, 1.5 * std::sin((hour - 6.0) * 3.14159265 / 12.0)));
        prices[t] = 0.05 + 0.1 * u(rng) + (hour > 17.0 && hour < 21.0 ? 0.3 : 0.0);
    }
    epf::BatteryParams params;
    const auto instance = epf::build_milp(params, day, prices);
    for (auto _ : state) benchmark::DoNotOptimize(epf::solve_battery(instance).objective);
}
BENCHMARK(BM_SolveBattery)->Arg(12)->Arg(48)->Unit(benchmark::kMillisecond);

}  // namespace

#include "epf/synthetic.hpp"

#include "epf/csv.hpp"
#include "epf/random.hpp"
#include "epf/surface_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace epf {

double student_t4_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("t4 quantile: p must lie in (0,1)");
    const double a = 4.0 * p * (1.0 - p);
    const double q = std::cos(std::acos(std::sqrt(a)) / 3.0) / std::sqrt(a);
    const double t = 2.0 * std::sqrt(std::max(0.0, q - 1.0));
    return p < 0.5 ? -t : t;
}

QuantileSurface SyntheticData::truth(std::size_t begin, std::size_t end) const {
    if (end < begin || end > location.size()) throw ArgumentError("synthetic truth: row range out of bounds");
    QuantileSurface s(prices.time_at(begin), standard_levels(), end - begin);
    for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t c = 0; c < s.cols(); ++c) {
            s.at(r, c) = location[begin + r] + scale[begin + r] * student_t4_quantile(s.levels[c]);
        }
    }
    return s;
}

SyntheticData generate_synthetic(const SynthConfig& config) {
    if (config.days < 1) throw ArgumentError("synth: days must be positive");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Rng rng(config.seed);

    SyntheticData out;
    const std::size_t n = config.days * kIntervalsPerDay;
    out.prices.start = Timestamp{config.start};
    out.prices.region = "SYN";
    out.prices.values.resize(n);
    out.location.resize(n);
    out.scale.resize(n);

    // Day-level weather anomalies follow an AR(1) so neighbouring days resemble each other.
    double temp_anomaly = 0.0;
    double wind_anomaly = 0.0;
    for (std::size_t d = 0; d < config.days; ++d) {
        temp_anomaly = 0.7 * temp_anomaly + 2.5 * rng.normal();
        wind_anomaly = 0.6 * wind_anomaly + 4.0 * rng.normal();
        const double season = 6.0 * std::cos(two_pi * static_cast<double>(d) / 365.0);
        for (std::size_t k = 0; k < kIntervalsPerDay; ++k) {
            const std::size_t t = d * kIntervalsPerDay + k;
            const Timestamp ts = out.prices.time_at(t);
            const double hour = static_cast<double>(k) / 12.0;
            const double temp = 21.0 + season + temp_anomaly + 7.0 * std::sin(two_pi * (hour - 9.0) / 24.0);
            const double wind =
                std::max(0.0, 18.0 + wind_anomaly + 6.0 * std::sin(two_pi * (hour - 14.0) / 24.0));
            const double humidity = std::clamp(60.0 - 1.5 * (temp - 21.0), 5.0, 95.0);
            const double cloud = std::clamp(40.0 + 2.0 * temp_anomaly, 0.0, 100.0);
            out.weather.push_back({ts, config.station, wind, temp, humidity, cloud});

            const bool weekend = day_of_week(ts) >= 5;
            const double mu = 70.0 + 25.0 * std::sin(two_pi * (hour - 8.0) / 24.0) +
                              18.0 * std::exp(-0.5 * std::pow((hour - 18.5) / 1.5, 2.0)) -
                              (weekend ? 12.0 : 0.0) + 0.35 * std::pow(temp - 19.0, 2.0) - 0.6 * wind;
            const double sigma =
                6.0 + 0.4 * wind + 6.0 * std::exp(-0.5 * std::pow((hour - 18.5) / 2.0, 2.0));
            out.location[t] = mu;
            out.scale[t] = sigma;
            out.prices.values[t] = mu + sigma * student_t4_quantile(rng.open_uniform());
        }
    }
    return out;
}

std::vector<ProsumerRecord> generate_prosumer(const SynthConfig& config) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Rng rng(mix_seed(config.seed, 0x70));
    std::vector<ProsumerRecord> out;
    for (std::size_t d = 0; d < config.days; ++d) {
        const double cloud = std::clamp(0.75 + 0.2 * rng.normal(), 0.2, 1.0);
        for (std::size_t k = 0; k < 48; ++k) {
            const double hour = static_cast<double>(k) / 2.0 + 0.25;
            const double demand = 0.25 + 0.35 * std::exp(-0.5 * std::pow((hour - 7.5) / 1.2, 2.0)) +
                                  0.6 * std::exp(-0.5 * std::pow((hour - 19.0) / 1.8, 2.0)) + 0.05 * rng.open_uniform();
            const double solar = std::max(0.0, std::sin(two_pi * (hour - 6.0) / 24.0));
            const double generation = 1.8 * cloud * solar * solar;
            const Timestamp t = Timestamp{config.start + std::chrono::days{static_cast<long>(d)}} +
                                std::chrono::minutes{30 * static_cast<long>(k)};
            out.push_back({t, demand, generation});
        }
    }
    return out;
}

void write_prosumer_csv(const std::filesystem::path& path, const std::vector<ProsumerRecord>& records) {
    auto out = csv::open_output(path);
    out << "timestamp,demand_kwh,generation_kwh\n";
    for (const auto& r : records) {
        out << format_timestamp(r.time) << ',' << csv::format_double(r.demand_kwh) << ','
            << csv::format_double(r.generation_kwh) << '\n';
    }
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    write_price_csv(dir / "prices.csv", data.prices);
    write_weather_csv(dir / "weather.csv", data.weather);
    write_surface_csv(dir / "truth.csv", data.truth(0, data.location.size()));
}

}  // namespace epf

#pragma once

#include "epf/data_pipeline.hpp"
#include "epf/economic.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace epf {

/// Quantile function of Student's t with four degrees of freedom (closed form).
double student_t4_quantile(double p);

struct SynthConfig {
    Date start = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1};
    std::size_t days = 180;
    std::uint64_t seed = 1;
    std::string station = "synth";
};

/// Prices y = mu + sigma * e with e ~ t4 drawn independently per interval. The location
/// depends on the time of day, the weekday and temperature; the scale on the time of
/// day and wind speed. Conditional quantiles mu + sigma * t4^-1(q) are therefore known.
struct SyntheticData {
    PriceSeries prices;
    std::vector<WeatherRecord> weather;
    std::vector<double> location;
    std::vector<double> scale;

    /// True conditional quantiles at the nine standard levels for rows [begin, end).
    [[nodiscard]] QuantileSurface truth(std::size_t begin, std::size_t end) const;
};

SyntheticData generate_synthetic(const SynthConfig& config);

/// Half-hourly household demand with a morning and evening peak and rooftop solar
/// generation around noon, stamped at the start of each half hour.
std::vector<ProsumerRecord> generate_prosumer(const SynthConfig& config);

/// Writes prices.csv, weather.csv and truth.csv into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

/// Writes `timestamp,demand_kwh,generation_kwh`.
void write_prosumer_csv(const std::filesystem::path& path, const std::vector<ProsumerRecord>& records);

}  // namespace epf

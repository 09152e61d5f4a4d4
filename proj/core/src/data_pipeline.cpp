#include "epf/data_pipeline.hpp"

#include "epf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace epf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::size_t PriceSeries::index_of(Timestamp t) const {
    if (t < start) throw ArgumentError(format_timestamp(t) + " precedes series start " + format_timestamp(start));
    const auto offset = t - start;
    if (offset % kStep != std::chrono::seconds{0}) {
        throw ArgumentError(format_timestamp(t) + " is not on the 5-minute grid");
    }
    return static_cast<std::size_t>(offset / kStep);
}

LoadedPrices load_price_csv(const std::filesystem::path& path, const PriceCsvSchema& schema) {
    const auto table = csv::read(path);
    const auto ts_col = table.column(schema.timestamp_column);
    const auto px_col = table.column(schema.price_column);

    struct Row {
        Timestamp t;
        double price;
        std::size_t line;
    };
    std::vector<Row> rows;
    rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto line = table.line_numbers[r];
        Timestamp t;
        try {
            t = parse_timestamp(table.rows[r][ts_col]);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(line) + ": " + e.what());
        }
        const double p = csv::parse_double(table.rows[r][px_col], path.string() + ": row " + std::to_string(line));
        rows.push_back({t, p, line});
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no price rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });

    LoadedPrices out;
    out.series.start = rows.front().t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].t == rows[i - 1].t) {
            throw ValidationError(path.string() + ": duplicate timestamp " + format_timestamp(rows[i].t) +
                                  " (rows " + std::to_string(rows[i - 1].line) + " and " +
                                  std::to_string(rows[i].line) + ")");
        }
    }
    const auto span = rows.back().t - rows.front().t;
    if (span % kStep != std::chrono::seconds{0}) {
        throw ValidationError(path.string() + ": timestamps are not on a common 5-minute grid");
    }
    out.series.values.assign(static_cast<std::size_t>(span / kStep) + 1, kNaN);
    for (const auto& row : rows) {
        const auto offset = row.t - out.series.start;
        if (offset % kStep != std::chrono::seconds{0}) {
            throw ValidationError(path.string() + ": row " + std::to_string(row.line) + ": timestamp " +
                                  format_timestamp(row.t) + " is off the 5-minute grid");
        }
        out.series.values[static_cast<std::size_t>(offset / kStep)] = row.price;
        if (!std::isnan(row.price) && (row.price < schema.price_floor || row.price > schema.price_cap)) {
            out.warnings.push_back("row " + std::to_string(row.line) + ": price " + csv::format_double(row.price) +
                                   " outside market limits [" + csv::format_double(schema.price_floor) + ", " +
                                   csv::format_double(schema.price_cap) + "]");
        }
    }

    std::size_t run = 0;
    for (std::size_t i = 0; i < out.series.values.size(); ++i) {
        run = std::isnan(out.series.values[i]) ? run + 1 : 0;
        if (run > schema.max_gap_intervals) {
            throw ValidationError(path.string() + ": gap of more than " + std::to_string(schema.max_gap_intervals) +
                                  " intervals ending at " + format_timestamp(out.series.time_at(i)));
        }
    }
    return out;
}

void write_price_csv(const std::filesystem::path& path, const PriceSeries& series) {
    auto out = csv::open_output(path);
    out << "timestamp,price\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.time_at(i)) << ',' << csv::format_double(series.values[i]) << '\n';
    }
}

std::vector<WeatherRecord> load_weather_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto c_ts = table.column("timestamp");
    const auto c_st = table.column("station");
    const auto c_wind = table.column("wind_kmh");
    const auto c_temp = table.column("temp_c");
    const auto c_hum = table.column("humidity_pct");
    const auto c_cloud = table.column("cloud_pct");

    std::vector<WeatherRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& f = table.rows[r];
        const std::string ctx = path.string() + ": row " + std::to_string(table.line_numbers[r]);
        WeatherRecord rec;
        try {
            rec.time = parse_timestamp(f[c_ts]);
        } catch (const ParseError& e) {
            throw ParseError(ctx + ": " + e.what());
        }
        rec.station = f[c_st];
        rec.wind_kmh = csv::parse_double(f[c_wind], ctx);
        rec.temp_c = csv::parse_double(f[c_temp], ctx);
        rec.humidity_pct = csv::parse_double(f[c_hum], ctx);
        rec.cloud_pct = csv::parse_double(f[c_cloud], ctx);
        if (!(rec.humidity_pct >= 0.0 && rec.humidity_pct <= 100.0)) {
            throw ValidationError(ctx + ": humidity " + f[c_hum] + " outside [0,100]");
        }
        if (!(rec.cloud_pct >= 0.0 && rec.cloud_pct <= 100.0)) {
            throw ValidationError(ctx + ": cloud cover " + f[c_cloud] + " outside [0,100]");
        }
        if (std::isnan(rec.wind_kmh) || std::isnan(rec.temp_c)) {
            throw ValidationError(ctx + ": missing wind or temperature");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_weather_csv(const std::filesystem::path& path, const std::vector<WeatherRecord>& records) {
    auto out = csv::open_output(path);
    out << "timestamp,station,wind_kmh,temp_c,humidity_pct,cloud_pct\n";
    for (const auto& r : records) {
        out << format_timestamp(r.time) << ',' << r.station << ',' << csv::format_double(r.wind_kmh) << ','
            << csv::format_double(r.temp_c) << ',' << csv::format_double(r.humidity_pct) << ','
            << csv::format_double(r.cloud_pct) << '\n';
    }
}

WeatherSeries resample_weather(const std::vector<WeatherRecord>& records, Timestamp start, std::size_t length,
                               std::chrono::seconds max_fill) {
    std::map<std::string, std::vector<const WeatherRecord*>> by_station;
    for (const auto& r : records) by_station[r.station].push_back(&r);

    WeatherSeries ws;
    ws.start = start;
    ws.length = length;
    for (auto& [name, recs] : by_station) {
        std::stable_sort(recs.begin(), recs.end(),
                         [](const WeatherRecord* a, const WeatherRecord* b) { return a->time < b->time; });
        for (std::size_t i = 1; i < recs.size(); ++i) {
            if (recs[i]->time == recs[i - 1]->time) {
                throw ValidationError("weather: duplicate record for station " + name + " at " +
                                      format_timestamp(recs[i]->time));
            }
        }
        std::vector<double> wind(length), temp(length), hum(length), cloud(length);
        std::size_t k = 0;
        for (std::size_t i = 0; i < length; ++i) {
            const Timestamp t = start + kStep * static_cast<long>(i);
            while (k + 1 < recs.size() && recs[k + 1]->time <= t) ++k;
            if (recs.empty() || recs[k]->time > t) {
                throw ValidationError("weather: station " + name + " has no record at or before " +
                                      format_timestamp(t));
            }
            if (t - recs[k]->time > max_fill) {
                throw ValidationError("weather: station " + name + " gap exceeds forward-fill limit at " +
                                      format_timestamp(t));
            }
            wind[i] = recs[k]->wind_kmh;
            temp[i] = recs[k]->temp_c;
            hum[i] = recs[k]->humidity_pct;
            cloud[i] = recs[k]->cloud_pct;
        }
        ws.stations.push_back(name);
        ws.wind_kmh.push_back(std::move(wind));
        ws.temp_c.push_back(std::move(temp));
        ws.humidity_pct.push_back(std::move(hum));
        ws.cloud_pct.push_back(std::move(cloud));
    }
    return ws;
}

std::vector<std::string> design_columns(const FeatureConfig& config, const std::vector<std::string>& stations) {
    std::vector<std::string> names;
    if (config.intercept) names.emplace_back("intercept");
    names.emplace_back("lag_288");
    names.emplace_back("lag_2016");
    for (const char* d : {"dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun"}) {
        names.emplace_back(d);
    }
    names.emplace_back("interval");
    for (int p = 2; p <= config.polynomial_degree; ++p) names.push_back("interval_pow" + std::to_string(p));
    if (config.weather) {
        for (const auto& s : stations) {
            names.push_back(s + "_wind_kmh");
            names.push_back(s + "_temp_c");
            names.push_back(s + "_humidity_pct");
            names.push_back(s + "_cloud_pct");
            if (config.weather_squares) {
                names.push_back(s + "_temp_c_sq");
                names.push_back(s + "_wind_kmh_sq");
            }
        }
    }
    return names;
}

DesignMatrix build_design_matrix(const PriceSeries& prices, const WeatherSeries* weather,
                                 const FeatureConfig& config, std::size_t begin, std::size_t end,
                                 TargetPolicy policy) {
    if (end < begin) throw ArgumentError("design matrix: end before begin");
    if (begin < kLagWeek) {
        throw ValidationError("design matrix: insufficient history, need " + std::to_string(kLagWeek) +
                              " intervals before the first target row, have " + std::to_string(begin));
    }
    const bool use_weather = config.weather && weather != nullptr && !weather->empty();
    if (use_weather) {
        if (weather->start != prices.start) throw ValidationError("design matrix: weather grid not aligned to prices");
        if (weather->length < end) throw ValidationError("design matrix: weather grid shorter than target range");
    }
    const std::vector<std::string> stations = use_weather ? weather->stations : std::vector<std::string>{};
    FeatureConfig effective = config;
    effective.weather = use_weather;

    DesignMatrix dm;
    dm.column_names = design_columns(effective, stations);
    dm.grid_start = prices.start;
    const std::size_t n_cols = dm.column_names.size();

    std::vector<std::size_t> keep;
    keep.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) {
        const double lag1 = t - kLagDay < prices.size() ? prices.values[t - kLagDay] : kNaN;
        const double lag7 = t - kLagWeek < prices.size() ? prices.values[t - kLagWeek] : kNaN;
        if (std::isnan(lag1) || std::isnan(lag7)) continue;
        const double y = t < prices.size() ? prices.values[t] : kNaN;
        if (policy == TargetPolicy::require && std::isnan(y)) continue;
        keep.push_back(t);
    }

    dm.X.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(n_cols));
    dm.targets.resize(keep.size());
    dm.source_rows = keep;
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const std::size_t t = keep[r];
        const Timestamp ts = prices.time_at(t);
        auto row = dm.X.row(static_cast<Eigen::Index>(r));
        Eigen::Index c = 0;
        if (config.intercept) row(c++) = 1.0;
        row(c++) = prices.values[t - kLagDay];
        row(c++) = prices.values[t - kLagWeek];
        const std::size_t dow = day_of_week(ts);
        for (std::size_t d = 0; d < 7; ++d) row(c++) = d == dow ? 1.0 : 0.0;
        const double interval = static_cast<double>(interval_of_day(ts));
        row(c++) = interval;
        double power = interval;
        for (int p = 2; p <= config.polynomial_degree; ++p) {
            power *= interval;
            row(c++) = power;
        }
        if (use_weather) {
            for (std::size_t s = 0; s < stations.size(); ++s) {
                const double wind = weather->wind_kmh[s][t];
                const double temp = weather->temp_c[s][t];
                row(c++) = wind;
                row(c++) = temp;
                row(c++) = weather->humidity_pct[s][t];
                row(c++) = weather->cloud_pct[s][t];
                if (config.weather_squares) {
                    row(c++) = temp * temp;
                    row(c++) = wind * wind;
                }
            }
        }
        dm.targets[r] = t < prices.size() ? prices.values[t] : kNaN;
    }
    return dm;
}

std::size_t RollingWindowPlan::required_days() const {
    const std::size_t longest =
        constituent_days.empty() ? 0 : *std::max_element(constituent_days.begin(), constituent_days.end());
    return spike_days + longest + ensemble_days;
}

namespace {

// Grid row of midnight on `day`, possibly negative.
long midnight_offset(const SeriesExtent& extent, Date day) {
    const auto diff = Timestamp{day} - extent.start;
    return static_cast<long>(diff / kStep) - (diff % kStep != std::chrono::seconds{0} ? 1 : 0);
}

}  // namespace

Date earliest_feasible_test_day(const RollingWindowPlan& plan, const SeriesExtent& extent) {
    Date first_midnight = date_of(extent.start);
    if (Timestamp{first_midnight} < extent.start) first_midnight += std::chrono::days{1};
    return first_midnight + std::chrono::days{static_cast<long>(plan.required_days())};
}

std::vector<WindowView> rolling_windows(const RollingWindowPlan& plan, const SeriesExtent& extent) {
    if (plan.constituent_days.empty()) throw ArgumentError("rolling windows: no constituent window lengths");
    const Date earliest = earliest_feasible_test_day(plan, extent);
    if (plan.first_test_day < earliest) {
        throw ValidationError("rolling windows: series too short for test day " + format_date(plan.first_test_day) +
                              "; earliest feasible test day is " + format_date(earliest));
    }
    const long day_rows = static_cast<long>(kIntervalsPerDay);
    const std::size_t longest = *std::max_element(plan.constituent_days.begin(), plan.constituent_days.end());

    std::vector<WindowView> views;
    views.reserve(plan.n_test_days);
    for (std::size_t k = 0; k < plan.n_test_days; ++k) {
        WindowView v;
        v.test_day = plan.first_test_day + std::chrono::days{static_cast<long>(k)};
        const long test_begin = midnight_offset(extent, v.test_day);
        const long ens_begin = test_begin - static_cast<long>(plan.ensemble_days) * day_rows;
        const long const_begin = ens_begin - static_cast<long>(longest) * day_rows;
        const long spike_begin = const_begin - static_cast<long>(plan.spike_days) * day_rows;
        v.test = {static_cast<std::size_t>(test_begin), static_cast<std::size_t>(test_begin + day_rows)};
        v.ensemble = {static_cast<std::size_t>(ens_begin), static_cast<std::size_t>(test_begin)};
        for (const auto days : plan.constituent_days) {
            v.constituents.push_back(
                {static_cast<std::size_t>(ens_begin - static_cast<long>(days) * day_rows),
                 static_cast<std::size_t>(ens_begin)});
        }
        v.spike_stats = {static_cast<std::size_t>(spike_begin), static_cast<std::size_t>(const_begin)};
        views.push_back(std::move(v));
    }
    return views;
}

}  // namespace epf

#include "epf/backtest.hpp"

#include "epf/csv.hpp"
#include "epf/evaluation.hpp"
#include "epf/linear_qr.hpp"
#include "epf/postprocess.hpp"
#include "epf/qrf.hpp"
#include "epf/random.hpp"
#include "epf/surface_io.hpp"
#include "epf/svr.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <thread>

namespace epf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void rethrow_in_context(const std::exception_ptr& error, const std::string& context) {
    try {
        std::rethrow_exception(error);
    } catch (const SolverError& e) {
        throw SolverError(context + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(context + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(context + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(context + ": " + e.what());
    }
}

// Runs body(0..n-1) on up to `threads` workers. After the first failure no new
// indices start; the failure with the lowest index is rethrown.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };
    const std::size_t extra = std::min(threads, n) > 1 ? std::min(threads, n) - 1 : 0;
    std::vector<std::thread> pool;
    pool.reserve(extra);
    for (std::size_t k = 0; k < extra; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t day_row(const PriceSeries& prices, Date day) { return prices.index_of(Timestamp{day}); }

std::vector<double> forward_filled(std::vector<double> v) {
    double last = kNaN;
    for (auto& x : v) {
        if (std::isnan(x)) x = last;
        else last = x;
    }
    return v;
}

bool same_values(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) != std::isnan(b[i])) return false;
        if (!std::isnan(a[i]) && std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
    }
    return true;
}

// Warnings that recur every day differ only in date, level and column list; keep the
// first occurrence of each and note how often it recurred.
std::vector<std::string> collapse_repeats(const std::vector<std::string>& warnings) {
    static const std::regex date_prefix(R"(^\d{4}-\d{2}-\d{2} )");
    static const std::regex level(R"( q[0-9.]+:)");
    static const std::regex columns(R"(columns [0-9,]+)");
    std::vector<std::string> keys;
    std::map<std::string, std::size_t> count;
    std::map<std::string, std::string> first;
    for (const auto& w : warnings) {
        std::string key = std::regex_replace(w, date_prefix, "");
        key = std::regex_replace(key, level, ":");
        key = std::regex_replace(key, columns, "columns");
        if (count[key]++ == 0) {
            keys.push_back(key);
            first[key] = w;
        }
    }
    std::vector<std::string> out;
    for (const auto& key : keys) {
        out.push_back(first[key]);
        if (count[key] > 1) out.back() += " (" + std::to_string(count[key]) + " occurrences)";
    }
    return out;
}

// Evenly spaced subset of at most `max_rows` rows (all rows when max_rows is 0).
void thin_rows(RowMatrix& X, std::vector<double>& y, std::size_t max_rows) {
    const std::size_t n = y.size();
    if (max_rows == 0 || n <= max_rows) return;
    RowMatrix Xs(static_cast<Eigen::Index>(max_rows), X.cols());
    std::vector<double> ys(max_rows);
    for (std::size_t k = 0; k < max_rows; ++k) {
        const std::size_t src = k * n / max_rows;
        Xs.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(src));
        ys[k] = y[src];
    }
    X = std::move(Xs);
    y = std::move(ys);
}

FeatureConfig features_for(const RunConfig& cfg, ModelKind kind) {
    FeatureConfig f = kind == ModelKind::linear_qr ? linear_features() : nonlinear_features();
    if (kind == ModelKind::linear_qr) f.polynomial_degree = cfg.polynomial_degree;
    f.weather = cfg.use_weather;
    return f;
}

// Constituent outputs for one forecast day.
struct DayForecast {
    std::vector<QuantileSurface> raw, smoothed;  // one per quantile constituent
    std::vector<double> point_raw, point_smoothed;
    bool filter_consistent = false;
    Timestamp latest_input{};
    std::vector<std::string> warnings;
};

void append_rows(QuantileSurface& dst, const QuantileSurface& src) {
    if (dst.levels.empty()) {
        dst = src;
        return;
    }
    dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
}

std::vector<double> anchor_at(std::span<const double> residuals, std::size_t row, std::size_t p) {
    std::vector<double> anchor(p, kNaN);
    for (std::size_t k = 0; k < p; ++k) {
        if (row >= p - k) anchor[k] = residuals[row - (p - k)];
    }
    return anchor;
}

}  // namespace

std::size_t BacktestSchedule::forecast_days() const {
    return static_cast<std::size_t>((last_test_day - first_forecast_day).count()) + 1;
}

std::size_t BacktestSchedule::test_days() const {
    return static_cast<std::size_t>((last_test_day - first_test_day).count()) + 1;
}

BacktestInputs load_inputs(const RunConfig& config) {
    if (config.prices.empty()) throw ArgumentError("config: no price file given");
    BacktestInputs in;
    auto loaded = load_price_csv(config.prices);
    in.prices = std::move(loaded.series);
    in.warnings = std::move(loaded.warnings);
    if (config.use_weather && !config.weather.empty()) {
        const auto records = load_weather_csv(config.weather);
        in.weather = resample_weather(records, in.prices.start, in.prices.size());
    }
    return in;
}

BacktestSchedule plan_backtest(const RunConfig& config, const PriceSeries& prices) {
    if (prices.size() == 0) throw ValidationError("backtest: empty price series");
    RollingWindowPlan plan;
    plan.spike_days = std::max<std::size_t>(config.spike.annual_days, kLagWeek / kIntervalsPerDay);
    plan.constituent_days.clear();
    for (const auto& c : config.constituents) plan.constituent_days.push_back(c.days);
    plan.ensemble_days = config.ensemble_days;
    const SeriesExtent extent{prices.start, prices.size()};

    BacktestSchedule s;
    s.first_test_day = config.from ? *config.from : earliest_feasible_test_day(plan, extent);
    s.last_test_day = config.to ? *config.to : date_of(prices.end_time()) - std::chrono::days{1};
    if (s.last_test_day < s.first_test_day) {
        throw ValidationError("backtest: no complete test day between " + format_date(s.first_test_day) + " and " +
                              format_date(s.last_test_day));
    }
    if (Timestamp{s.last_test_day + std::chrono::days{1}} > prices.end_time()) {
        throw ValidationError("backtest: test day " + format_date(s.last_test_day) +
                              " extends beyond the price data ending " + format_timestamp(prices.end_time()));
    }
    plan.first_test_day = s.first_test_day;
    plan.n_test_days = s.test_days();
    (void)rolling_windows(plan, extent);
    s.first_forecast_day = s.first_test_day - std::chrono::days{static_cast<long>(config.ensemble_days)};
    return s;
}

BacktestResult run_backtest(const RunConfig& config, const BacktestInputs& inputs) {
    config.validate();
    const PriceSeries& prices = inputs.prices;
    const WeatherSeries* weather = inputs.weather ? &*inputs.weather : nullptr;
    const BacktestSchedule schedule = plan_backtest(config, prices);
    const std::size_t threads = resolve_threads(config.threads);
    const std::vector<double> levels = standard_levels();
    const std::size_t p = config.ar_order;
    const std::size_t n_days = schedule.forecast_days();
    const std::size_t ens_days = config.ensemble_days;

    std::vector<ConstituentSpec> quantile_specs;
    std::optional<ConstituentSpec> point_spec;
    for (const auto& c : config.constituents) {
        if (c.is_point()) point_spec = c;
        else quantile_specs.push_back(c);
    }

    BacktestResult result;
    result.config_hash = config.hash();
    result.schedule = schedule;
    for (const auto& c : quantile_specs) result.quantile_ids.push_back(c.id());
    if (point_spec) result.point_id = point_spec->id();
    result.warnings = inputs.warnings;

    // The spike filter is causal, so one pass over the whole series gives every
    // prefix; each forecast day re-filters its own prefix and checks agreement.
    const std::size_t end_row = day_row(prices, schedule.last_test_day) + kIntervalsPerDay;
    PriceSeries full = prices;
    full.values.resize(end_row);
    const SpikeMask full_mask = filter_spikes(full, config.spike);

    // Stage 1: constituent forecasts for every forecast day.
    std::vector<DayForecast> days(n_days);
    parallel_for(n_days, threads, [&](std::size_t i) {
        const Date day = schedule.first_forecast_day + std::chrono::days{static_cast<long>(i)};
        const std::size_t row0 = day_row(prices, day);
        DayForecast& out = days[i];
        std::string stage = "spike_filter";
        try {
            PriceSeries history{prices.start, {prices.values.begin(), prices.values.begin() + static_cast<long>(row0)},
                                prices.region};
            const SpikeMask mask = filter_spikes(history, config.spike);
            out.filter_consistent = same_values(mask.imputed.values, {full_mask.imputed.values.data(), row0});
            out.latest_input = history.time_at(row0 - 1);
            PriceSeries model_input{history.start, forward_filled(mask.imputed.values), history.region};

            const auto day_number = static_cast<std::uint64_t>(day.time_since_epoch().count());
            for (std::size_t k = 0; k < config.constituents.size(); ++k) {
                const ConstituentSpec& spec = config.constituents[k];
                stage = spec.id();
                const std::uint64_t seed = mix_seed(config.seed, day_number * 64 + k);
                const FeatureConfig fc = features_for(config, spec.kind);
                const std::size_t begin = row0 - spec.days * kIntervalsPerDay;
                DesignMatrix train = build_design_matrix(model_input, weather, fc, begin, row0);
                const DesignMatrix query =
                    build_design_matrix(model_input, weather, fc, row0, row0 + kIntervalsPerDay, TargetPolicy::optional);
                if (query.rows() != kIntervalsPerDay) {
                    throw ValidationError("missing lagged inputs for " +
                                          std::to_string(kIntervalsPerDay - query.rows()) + " forecast rows");
                }
                if (spec.kind == ModelKind::svr) {
                    const SvrModel model = fit_svr(train.X, train.targets, config.svr, seed);
                    const Eigen::VectorXd pred = predict_svr(model, query.X);
                    out.point_raw.assign(pred.data(), pred.data() + pred.size());
                    out.point_smoothed = smooth_series(out.point_raw, config.smoothing_order);
                    continue;
                }
                QuantileSurface raw(Timestamp{day}, levels, kIntervalsPerDay);
                if (spec.kind == ModelKind::linear_qr) {
                    for (std::size_t c = 0; c < levels.size(); ++c) {
                        const QrModel m = fit_qr(train.X, train.targets, levels[c]);
                        for (const auto& w : m.warnings) {
                            out.warnings.push_back(format_date(day) + " " + stage + " q" +
                                                   csv::format_double(levels[c]) + ": " + w);
                        }
                        const Eigen::VectorXd pred = predict_qr(m, query.X);
                        for (std::size_t r = 0; r < kIntervalsPerDay; ++r) raw.at(r, c) = pred[static_cast<Eigen::Index>(r)];
                    }
                } else {
                    thin_rows(train.X, train.targets, config.forest_max_rows);
                    const Forest forest = fit_forest(train.X, train.targets, config.forest, seed);
                    for (std::size_t r = 0; r < kIntervalsPerDay; ++r) {
                        const auto row = query.X.row(static_cast<Eigen::Index>(r));
                        const auto q = predict_quantiles(forest, {row.data(), static_cast<std::size_t>(row.size())}, levels);
                        std::copy(q.begin(), q.end(), raw.row(r).begin());
                    }
                }
                rearrange(raw);
                out.smoothed.push_back(smooth_centered_ma(raw, config.smoothing_order, kIntervalsPerDay));
                out.raw.push_back(std::move(raw));
            }
        } catch (...) {
            rethrow_in_context(std::current_exception(), "day " + format_date(day) + " stage " + stage);
        }
    });

    // Residuals of each model's smoothed median (or point) against the imputed
    // observations, over all forecast days.
    const std::size_t first_row = day_row(prices, schedule.first_forecast_day);
    const std::size_t n_models = quantile_specs.size() + (point_spec ? 1 : 0);
    std::vector<std::vector<double>> residuals(n_models, std::vector<double>(n_days * kIntervalsPerDay));
    for (std::size_t d = 0; d < n_days; ++d) {
        for (std::size_t r = 0; r < kIntervalsPerDay; ++r) {
            const std::size_t t = d * kIntervalsPerDay + r;
            const double y = full_mask.imputed.values[first_row + t];
            for (std::size_t m = 0; m < quantile_specs.size(); ++m) {
                residuals[m][t] = y - days[d].smoothed[m].at(r, kMedianIndex);
            }
            if (point_spec) residuals.back()[t] = y - days[d].point_smoothed[r];
        }
    }

    // Stage 2: post-processing and ensembles per test day.
    struct TestDayOutput {
        std::vector<QuantileSurface> post;
        std::vector<double> point_post;
        std::vector<QuantileSurface> ensembles;
        std::vector<CoefficientRecord> coefficients;
        std::vector<ArRecord> ar;
        std::vector<InsampleRecord> insample;
        std::vector<std::string> warnings;
    };
    const std::size_t n_test = schedule.test_days();
    std::vector<TestDayOutput> tests(n_test);
    std::vector<std::vector<std::string>> manifests(config.ensembles.size());

    parallel_for(n_test, threads, [&](std::size_t j) {
        const Date day = schedule.first_test_day + std::chrono::days{static_cast<long>(j)};
        TestDayOutput& out = tests[j];
        std::string stage = "ar_residuals";
        try {
            const std::size_t window_begin = j * kIntervalsPerDay;       // forecast-day coordinates
            const std::size_t window_end = (j + ens_days) * kIntervalsPerDay;
            const std::size_t train_rows = window_end - window_begin;

            ConstituentSet train, test;
            train.ids = result.quantile_ids;
            test.ids = result.quantile_ids;
            for (std::size_t m = 0; m < n_models; ++m) {
                const bool is_point = m == quantile_specs.size();
                const std::string id = is_point ? point_spec->id() : quantile_specs[m].id();
                stage = "ar_residuals " + id;
                const ArModel ar = fit_ar_residual(
                    std::span<const double>(residuals[m]).subspan(window_begin, train_rows), p);
                out.ar.push_back({day, id, ar.phi, ar.spectral_radius});

                QuantileSurface train_surface;
                std::vector<double> train_point;
                for (std::size_t d = j; d <= j + ens_days; ++d) {
                    const auto anchor = anchor_at(residuals[m], d * kIntervalsPerDay, p);
                    const bool is_test = d == j + ens_days;
                    std::vector<std::string> w;
                    if (is_point) {
                        const auto shift = ar_forecast(ar, anchor, kIntervalsPerDay);
                        std::vector<double> shifted(days[d].point_smoothed);
                        for (std::size_t r = 0; r < shifted.size(); ++r) shifted[r] += shift[r];
                        if (is_test) out.point_post = std::move(shifted);
                        else train_point.insert(train_point.end(), shifted.begin(), shifted.end());
                    } else {
                        QuantileSurface shifted =
                            shift_quantiles(days[d].smoothed[m], ar, anchor, is_test ? &w : nullptr);
                        if (is_test) out.post.push_back(std::move(shifted));
                        else append_rows(train_surface, shifted);
                    }
                    for (const auto& msg : w) out.warnings.push_back(format_date(day) + " " + id + ": " + msg);
                }
                if (is_point) {
                    train.point_id = test.point_id = id;
                    train.point = std::move(train_point);
                    test.point = out.point_post;
                } else {
                    train.surfaces.push_back(std::move(train_surface));
                    test.surfaces.push_back(out.post.back());
                }
            }

            std::vector<double> target(train_rows);
            for (std::size_t t = 0; t < train_rows; ++t) target[t] = prices.values[first_row + window_begin + t];

            for (std::size_t e = 0; e < config.ensembles.size(); ++e) {
                const EnsembleKind kind = config.ensembles[e];
                stage = std::string("ensemble ") + std::string(to_string(kind));
                const EnsembleModel model = fit_ensemble(kind, train, target);
                if (j == 0) manifests[e] = model.manifest;
                for (const auto& w : model.warnings) out.warnings.push_back(format_date(day) + " " + stage + ": " + w);
                out.ensembles.push_back(predict_ensemble(model, test));
                for (const auto& lc : model.levels) {
                    out.coefficients.push_back({day, kind, lc});
                    const RowMatrix inputs = assemble_inputs(kind, train, lc.level);
                    InsampleRecord rec{day, kind, lc.level, lc.objective / static_cast<double>(lc.rows_used), "",
                                       std::numeric_limits<double>::infinity()};
                    for (Eigen::Index c = 1; c < inputs.cols(); ++c) {
                        std::vector<double> col(train_rows);
                        for (std::size_t t = 0; t < train_rows; ++t) col[t] = inputs(static_cast<Eigen::Index>(t), c);
                        const double v = mean_pinball(target, col, lc.level);
                        if (v < rec.best_input_value) {
                            rec.best_input_value = v;
                            rec.best_input = model.manifest[static_cast<std::size_t>(c)];
                        }
                    }
                    out.insample.push_back(std::move(rec));
                }
            }
        } catch (...) {
            rethrow_in_context(std::current_exception(), "day " + format_date(day) + " stage " + stage);
        }
    });

    // Collect test-day outputs in time order.
    const std::size_t test_row = day_row(prices, schedule.first_test_day);
    result.start = prices.time_at(test_row);
    const std::size_t n_rows = n_test * kIntervalsPerDay;
    result.observed.assign(prices.values.begin() + static_cast<long>(test_row),
                           prices.values.begin() + static_cast<long>(test_row + n_rows));
    result.imputed.assign(full_mask.imputed.values.begin() + static_cast<long>(test_row),
                          full_mask.imputed.values.begin() + static_cast<long>(test_row + n_rows));
    result.labels.assign(full_mask.labels.begin() + static_cast<long>(test_row),
                         full_mask.labels.begin() + static_cast<long>(test_row + n_rows));
    if (point_spec) result.point.emplace();
    for (std::size_t e = 0; e < config.ensembles.size(); ++e) result.manifests[config.ensembles[e]] = manifests[e];

    for (std::size_t d = 0; d < n_days; ++d) {
        const Date day = schedule.first_forecast_day + std::chrono::days{static_cast<long>(d)};
        for (const auto& w : days[d].warnings) result.warnings.push_back(w);
        result.causality.push_back({day, "constituents", days[d].latest_input, Timestamp{day},
                                    days[d].filter_consistent && days[d].latest_input < Timestamp{day}});
        if (day < schedule.first_test_day) continue;
        const std::size_t j = static_cast<std::size_t>((day - schedule.first_test_day).count());
        const Timestamp last_prior = Timestamp{day} - kStep;
        result.causality.push_back({day, "ar_residuals", last_prior, Timestamp{day}, last_prior < Timestamp{day}});
        result.causality.push_back({day, "ensemble_fit", last_prior, Timestamp{day}, last_prior < Timestamp{day}});

        for (std::size_t m = 0; m < quantile_specs.size(); ++m) {
            const std::string& id = quantile_specs[m].id();
            append_rows(result.raw[id], days[d].raw[m]);
            append_rows(result.smoothed[id], days[d].smoothed[m]);
            append_rows(result.postprocessed[id], tests[j].post[m]);
        }
        if (point_spec) {
            auto& pt = *result.point;
            pt.raw.insert(pt.raw.end(), days[d].point_raw.begin(), days[d].point_raw.end());
            pt.smoothed.insert(pt.smoothed.end(), days[d].point_smoothed.begin(), days[d].point_smoothed.end());
            pt.postprocessed.insert(pt.postprocessed.end(), tests[j].point_post.begin(), tests[j].point_post.end());
        }
        for (std::size_t e = 0; e < config.ensembles.size(); ++e) {
            append_rows(result.ensemble[config.ensembles[e]], tests[j].ensembles[e]);
        }
        auto& t = tests[j];
        result.coefficients.insert(result.coefficients.end(), t.coefficients.begin(), t.coefficients.end());
        result.ar_models.insert(result.ar_models.end(), t.ar.begin(), t.ar.end());
        result.insample.insert(result.insample.end(), t.insample.begin(), t.insample.end());
        result.warnings.insert(result.warnings.end(), t.warnings.begin(), t.warnings.end());
    }
    result.warnings = collapse_repeats(result.warnings);
    return result;
}

namespace {

std::string label_code(SpikeLabel l) { return std::to_string(static_cast<int>(l)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = csv::open_output(path);
    out << text;
}

}  // namespace

void write_artifacts(const std::filesystem::path& dir, const RunConfig& config, const BacktestResult& result) {
    using nlohmann::json;
    write_text(dir / "config.txt", config.canonical());

    {
        auto out = csv::open_output(dir / "observations.csv");
        out << "timestamp,observed,imputed,spike\n";
        for (std::size_t r = 0; r < result.rows(); ++r) {
            out << format_timestamp(result.start + kStep * static_cast<long>(r)) << ','
                << csv::format_double(result.observed[r]) << ',' << csv::format_double(result.imputed[r]) << ','
                << label_code(result.labels[r]) << '\n';
        }
    }

    json files = json::object();
    for (const auto& id : result.quantile_ids) {
        write_surface_csv(dir / "surfaces" / (id + "_raw.csv"), result.raw.at(id));
        write_surface_csv(dir / "surfaces" / (id + "_smoothed.csv"), result.smoothed.at(id));
        write_surface_csv(dir / "surfaces" / (id + "_postprocessed.csv"), result.postprocessed.at(id));
        files[id] = "surfaces/" + id + "_postprocessed.csv";
    }
    if (result.point) {
        write_columns_csv(dir / "surfaces" / (result.point_id + "_point.csv"),
                          {result.start,
                           {"raw", "smoothed", "postprocessed"},
                           {result.point->raw, result.point->smoothed, result.point->postprocessed}});
    }
    for (const auto& [kind, surface] : result.ensemble) {
        const std::string name(to_string(kind));
        write_surface_csv(dir / "ensemble" / (name + ".csv"), surface);
        files[name] = "ensemble/" + name + ".csv";
    }

    for (const auto& [kind, manifest] : result.manifests) {
        const std::string name(to_string(kind));
        auto out = csv::open_output(dir / "coefficients" / (name + ".csv"));
        out << "day,level,objective,rows_used";
        for (const auto& m : manifest) out << ',' << m;
        out << '\n';
        for (const auto& rec : result.coefficients) {
            if (rec.kind != kind) continue;
            out << format_date(rec.day) << ',' << csv::format_double(rec.fit.level) << ','
                << csv::format_double(rec.fit.objective) << ',' << rec.fit.rows_used;
            for (Eigen::Index c = 0; c < rec.fit.coefficients.size(); ++c) {
                out << ',' << csv::format_double(rec.fit.coefficients[c]);
            }
            out << '\n';
        }
    }

    {
        auto out = csv::open_output(dir / "diagnostics" / "ar_models.csv");
        out << "day,model";
        for (std::size_t k = 1; k <= config.ar_order; ++k) out << ",phi" << k;
        out << ",spectral_radius\n";
        for (const auto& rec : result.ar_models) {
            out << format_date(rec.day) << ',' << rec.model;
            for (const double v : rec.phi) out << ',' << csv::format_double(v);
            out << ',' << csv::format_double(rec.spectral_radius) << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "diagnostics" / "insample_pinball.csv");
        out << "day,kind,level,ensemble,best_input,best_input_value\n";
        for (const auto& rec : result.insample) {
            out << format_date(rec.day) << ',' << to_string(rec.kind) << ',' << csv::format_double(rec.level) << ','
                << csv::format_double(rec.ensemble) << ',' << rec.best_input << ','
                << csv::format_double(rec.best_input_value) << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "causality.csv");
        out << "day,stage,latest_input,issue_time,ok\n";
        for (const auto& rec : result.causality) {
            out << format_date(rec.day) << ',' << rec.stage << ',' << format_timestamp(rec.latest_input) << ','
                << format_timestamp(rec.issue_time) << ',' << (rec.ok ? "true" : "false") << '\n';
        }
    }
    {
        std::string text;
        for (const auto& w : result.warnings) text += w + '\n';
        write_text(dir / "warnings.txt", text);
    }

    const bool causal = std::all_of(result.causality.begin(), result.causality.end(),
                                    [](const CausalityRecord& r) { return r.ok; });
    json manifest;
    manifest["status"] = "complete";
    manifest["config_hash"] = result.config_hash;
    manifest["levels"] = standard_levels();
    manifest["first_forecast_day"] = format_date(result.schedule.first_forecast_day);
    manifest["first_test_day"] = format_date(result.schedule.first_test_day);
    manifest["last_test_day"] = format_date(result.schedule.last_test_day);
    manifest["start"] = format_timestamp(result.start);
    manifest["rows"] = result.rows();
    manifest["quantile_models"] = result.quantile_ids;
    manifest["point_model"] = result.point_id;
    json ens = json::object();
    for (const auto& [kind, m] : result.manifests) ens[std::string(to_string(kind))] = m;
    manifest["ensemble_inputs"] = ens;
    std::vector<std::string> kinds;
    for (const auto k : config.ensembles) kinds.emplace_back(to_string(k));
    manifest["ensembles"] = kinds;
    manifest["surfaces"] = files;
    manifest["smoothing"] = "2x" + std::to_string(config.smoothing_order) +
                            " centered moving average per day, truncated and renormalized at day edges";
    manifest["ar_order"] = config.ar_order;
    manifest["cdf"] = std::string(kCdfConstruction);
    manifest["causality_ok"] = causal;
    manifest["warnings"] = result.warnings.size();
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

void write_failure_manifest(const std::filesystem::path& dir, const RunConfig& config, const std::string& message) {
    nlohmann::json manifest;
    manifest["status"] = "failed";
    manifest["config_hash"] = config.hash();
    manifest["error"] = message;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

StoredRun read_artifacts(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ValidationError("no manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "manifest.json").string() + ": " + e.what());
    }
    if (manifest.value("status", "") != "complete") {
        throw ValidationError("artifact " + dir.string() + " is not a completed run");
    }
    StoredRun run;
    run.config_hash = manifest.at("config_hash").get<std::string>();
    run.start = parse_timestamp(manifest.at("start").get<std::string>());
    const auto obs = read_columns_csv(dir / "observations.csv");
    if (obs.start != run.start) throw ValidationError("observations do not start at the manifest start");
    run.observed = obs.column("observed");

    std::vector<std::string> ordered = manifest.at("quantile_models").get<std::vector<std::string>>();
    for (const auto& name : manifest.at("ensembles")) ordered.push_back(name.get<std::string>());
    for (const auto& name : ordered) {
        const auto rel = manifest.at("surfaces").at(name).get<std::string>();
        QuantileSurface s = read_surface_csv(dir / rel);
        if (s.start != run.start || s.rows() != run.observed.size()) {
            throw ValidationError("surface " + rel + " does not cover the observation span");
        }
        run.surfaces.emplace(name, std::move(s));
        run.models.push_back(name);
    }
    run.point_id = manifest.value("point_model", "");
    if (!run.point_id.empty()) {
        const auto pt = read_columns_csv(dir / "surfaces" / (run.point_id + "_point.csv"));
        run.point = pt.column("postprocessed");
    }
    return run;
}

}  // namespace epf

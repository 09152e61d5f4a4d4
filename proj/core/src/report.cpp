#include "epf/report.hpp"

#include "epf/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace epf {

std::optional<double> PointForecast::at(Timestamp t) const {
    const auto it = values.find(t);
    if (it == values.end() || std::isnan(it->second)) return std::nullopt;
    return it->second;
}

PointForecast load_point_forecast(const std::filesystem::path& path, const std::string& column) {
    const auto table = csv::read(path);
    const std::size_t tc = table.column("timestamp");
    const std::size_t vc = table.column(column);
    PointForecast out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string context = path.string() + ":" + std::to_string(table.line_numbers[i]);
        Timestamp t;
        try {
            t = parse_timestamp(row[tc]);
        } catch (const ParseError& e) {
            throw ParseError(context + ": " + e.what());
        }
        if (!out.values.emplace(t, csv::parse_double(row[vc], context)).second) {
            throw ValidationError(context + ": duplicate timestamp " + format_timestamp(t));
        }
    }
    return out;
}

const PicpReport& RunEvaluation::picp(const std::string& model, double coverage) const {
    const auto it = reports.find(model);
    if (it == reports.end()) throw ArgumentError("evaluation has no model " + model);
    for (const auto& p : it->second.picp) {
        if (std::abs(p.coverage - coverage) < 1e-12) return p;
    }
    throw ArgumentError("evaluation has no PICP at coverage " + csv::format_double(coverage));
}

namespace {

std::size_t period_of(Timestamp start, std::size_t row) {
    return interval_of_day(start + kStep * static_cast<long>(row)) - 1;
}

// Per-row pinball losses at column c, only for rows with an observation.
std::vector<double> losses(const QuantileSurface& s, std::span<const double> y, std::size_t c, double q) {
    std::vector<double> out;
    for (std::size_t r = 0; r < s.rows(); ++r) {
        if (!std::isnan(y[r])) out.push_back(pinball(y[r], s.at(r, c), q));
    }
    return out;
}

// Observed row indices grouped by dispatch period.
std::vector<std::vector<std::size_t>> rows_by_period(Timestamp start, std::span<const double> y) {
    std::vector<std::vector<std::size_t>> out(kIntervalsPerDay);
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (!std::isnan(y[r])) out[period_of(start, r)].push_back(r);
    }
    return out;
}

}  // namespace

RunEvaluation evaluate_run(const StoredRun& run, const EvaluateOptions& options) {
    if (run.models.empty()) throw ValidationError("evaluate: run has no forecast surfaces");
    RunEvaluation ev;
    ev.config_hash = run.config_hash;
    ev.days = run.observed.size() / kIntervalsPerDay;
    ev.levels = run.surfaces.at(run.models.front()).levels;
    ev.models = run.models;
    ev.reference = options.reference;
    ev.significance = options.significance;
    const std::span<const double> y = run.observed;

    for (const auto& m : run.models) ev.reports.emplace(m, evaluate_forecast(run.surfaces.at(m), y));
    if (run.point) {
        ev.point_id = run.point_id;
        ev.point_pinball = mean_pinball(y, *run.point, 0.5);
    }

    const auto by_period = rows_by_period(run.start, y);
    const bool per_period_dm = ev.days >= 30;
    if (!per_period_dm) ev.notes.push_back("fewer than 30 days: per-period Diebold-Mariano tests skipped");

    if (run.surfaces.count(options.reference) != 0) {
        const auto& ref = run.surfaces.at(options.reference);
        for (const auto& other_id : run.models) {
            if (other_id == options.reference) continue;
            const auto& other = run.surfaces.at(other_id);
            for (std::size_t c = 0; c < ev.levels.size(); ++c) {
                const double q = ev.levels[c];
                DmRow row{options.reference, other_id, q, {}, 0, 0, 0};
                const auto lo = losses(other, y, c, q);
                const auto lr = losses(ref, y, c, q);
                if (lo.size() < 30) {
                    ev.notes.push_back("Diebold-Mariano needs 30 observations; skipped " + other_id);
                    continue;
                }
                row.overall = diebold_mariano(lo, lr);
                if (per_period_dm) {
                    for (const auto& rows : by_period) {
                        if (rows.size() < 30) continue;
                        std::vector<double> a, b;
                        for (const std::size_t r : rows) {
                            a.push_back(pinball(y[r], other.at(r, c), q));
                            b.push_back(pinball(y[r], ref.at(r, c), q));
                        }
                        ++row.periods_tested;
                        if (diebold_mariano(a, b).p_value < options.significance) ++row.reference_better;
                        if (diebold_mariano(b, a).p_value < options.significance) ++row.other_better;
                    }
                }
                ev.dm.push_back(row);
            }
        }
    } else {
        ev.notes.push_back("reference model " + options.reference + " not in run: Diebold-Mariano skipped");
    }

    for (const auto& m : run.models) {
        const auto& s = run.surfaces.at(m);
        for (std::size_t c = 0; c < ev.levels.size(); ++c) {
            const double q = ev.levels[c];
            KupiecRow row{m, q, {}, 0, 0};
            std::size_t hits = 0;
            std::size_t total = 0;
            for (const auto& rows : by_period) {
                std::size_t h = 0;
                for (const std::size_t r : rows) h += y[r] < s.at(r, c) ? 1 : 0;
                hits += h;
                total += rows.size();
                if (rows.empty()) continue;
                ++row.periods_tested;
                if (kupiec_pof(h, rows.size(), q).p_value >= options.significance) ++row.periods_pass;
            }
            row.overall = kupiec_pof(hits, total, q);
            ev.kupiec.push_back(row);
        }
    }

    for (const auto& m : run.models) {
        ev.abs_error.push_back({m, "all", abs_error_stats(run.surfaces.at(m).column(kMedianIndex), y)});
    }
    if (run.point) ev.abs_error.push_back({run.point_id, "all", abs_error_stats(*run.point, y)});
    if (options.baseline) {
        std::vector<double> base, obs;
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < y.size(); ++r) {
            if (const auto v = options.baseline->at(run.start + kStep * static_cast<long>(r))) {
                base.push_back(*v);
                obs.push_back(y[r]);
                rows.push_back(r);
            }
        }
        if (rows.empty()) throw ValidationError("evaluate: baseline has no timestamps inside the run");
        ev.abs_error.push_back({"baseline", "baseline_times", abs_error_stats(base, obs)});
        for (const auto& m : run.models) {
            std::vector<double> med;
            for (const std::size_t r : rows) med.push_back(run.surfaces.at(m).at(r, kMedianIndex));
            ev.abs_error.push_back({m, "baseline_times", abs_error_stats(med, obs)});
        }
    }
    return ev;
}

namespace {

std::string level_header(const std::vector<double>& levels) {
    std::string h;
    for (const double q : levels) h += ",q" + csv::format_double(q);
    return h;
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

void write_evaluation(const std::filesystem::path& dir, const RunEvaluation& ev) {
    {
        auto out = csv::open_output(dir / "pinball.csv");
        out << "model" << level_header(ev.levels) << ",mean\n";
        for (const auto& m : ev.models) {
            const auto& r = ev.reports.at(m);
            double sum = 0.0;
            out << m;
            for (const double v : r.mean_pinball) {
                out << ',' << fmt(v);
                sum += v;
            }
            out << ',' << fmt(sum / static_cast<double>(r.mean_pinball.size())) << '\n';
        }
        if (!ev.point_id.empty()) {
            out << ev.point_id;
            for (const double q : ev.levels) out << ',' << (q == 0.5 ? fmt(ev.point_pinball) : "");
            out << ",\n";
        }
    }
    {
        auto out = csv::open_output(dir / "crps.csv");
        out << "# cdf: " << kCdfConstruction << '\n';
        out << "model,crps,observations\n";
        for (const auto& m : ev.models) {
            out << m << ',' << fmt(ev.reports.at(m).mean_crps) << ',' << ev.reports.at(m).observed << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "picp.csv");
        out << "model";
        for (const double c : kPicpCoverages) out << ",picp" << static_cast<int>(std::lround(c * 100));
        out << '\n';
        for (const auto& m : ev.models) {
            out << m;
            for (const auto& p : ev.reports.at(m).picp) out << ',' << fmt(p.rate);
            out << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "picp_by_period.csv");
        out << "# bars: nominal -/+ 1.96 sqrt(p(1-p)/n) with n the observations in the period\n";
        out << "model,coverage,period,hits,total,picp,bar_low,bar_high,within_bars\n";
        for (const auto& m : ev.models) {
            for (const auto& p : ev.reports.at(m).picp) {
                for (std::size_t k = 0; k < p.period_total.size(); ++k) {
                    const std::size_t n = p.period_total[k];
                    out << m << ',' << fmt(p.coverage) << ',' << k + 1 << ',' << p.period_hits[k] << ',' << n;
                    if (n == 0) {
                        out << ",,,,\n";
                        continue;
                    }
                    const Bars b = consistency_bars(n, p.coverage);
                    const double rate = p.period_rate(k);
                    out << ',' << fmt(rate) << ',' << fmt(b.low) << ',' << fmt(b.high) << ','
                        << (rate >= b.low && rate <= b.high ? 1 : 0) << '\n';
                }
            }
        }
    }
    {
        auto out = csv::open_output(dir / "dm.csv");
        out << "# statistic on d = loss(other) - loss(reference); p is one-sided for the reference being more "
               "accurate\n";
        out << "reference,other,level,statistic,p_value,lag,n,variance_floored,periods_tested,reference_better,"
               "other_better\n";
        for (const auto& r : ev.dm) {
            out << r.reference << ',' << r.other << ',' << fmt(r.level) << ',' << fmt(r.overall.statistic) << ','
                << fmt(r.overall.p_value) << ',' << r.overall.lag << ',' << r.overall.n << ','
                << (r.overall.variance_floored ? 1 : 0) << ',' << r.periods_tested << ',' << r.reference_better
                << ',' << r.other_better << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "kupiec.csv");
        out << "# violation: observation below the quantile forecast; nominal rate = level\n";
        out << "model,level,violations,total,rate,lr,p_value,periods_tested,periods_pass\n";
        for (const auto& r : ev.kupiec) {
            out << r.model << ',' << fmt(r.level) << ',' << r.overall.violations << ',' << r.overall.total << ','
                << fmt(r.overall.rate) << ',' << fmt(r.overall.lr) << ',' << fmt(r.overall.p_value) << ','
                << r.periods_tested << ',' << r.periods_pass << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "abs_error.csv");
        out << "model,scope,n,mean_ae,median_ae\n";
        for (const auto& r : ev.abs_error) {
            out << r.model << ',' << r.scope << ',' << r.stats.n << ',' << fmt(r.stats.mean) << ','
                << fmt(r.stats.median) << '\n';
        }
    }
    {
        std::ostringstream s;
        s << "config_hash: " << ev.config_hash << '\n';
        s << "cdf: " << kCdfConstruction << '\n';
        s << "days: " << ev.days << '\n';
        s << "significance: " << fmt(ev.significance) << '\n';
        for (const auto& note : ev.notes) s << "note: " << note << '\n';
        s << "\nmean pinball\n";
        for (const auto& m : ev.models) {
            s << "  " << m;
            for (const double v : ev.reports.at(m).mean_pinball) s << ' ' << fmt(v);
            s << '\n';
        }
        s << "\nCRPS / PICP 50 80 90 95\n";
        for (const auto& m : ev.models) {
            s << "  " << m << ' ' << fmt(ev.reports.at(m).mean_crps) << " /";
            for (const auto& p : ev.reports.at(m).picp) s << ' ' << fmt(p.rate);
            s << '\n';
        }
        if (!ev.dm.empty()) {
            s << "\nDiebold-Mariano (" << ev.dm.front().reference << " vs other): level p_value periods_better\n";
            for (const auto& r : ev.dm) {
                s << "  " << r.other << ' ' << fmt(r.level) << ' ' << fmt(r.overall.p_value) << ' '
                  << r.reference_better << '/' << r.periods_tested << '\n';
            }
        }
        s << "\nKupiec periods passing: model level passed/tested\n";
        for (const auto& r : ev.kupiec) {
            s << "  " << r.model << ' ' << fmt(r.level) << ' ' << r.periods_pass << '/' << r.periods_tested << '\n';
        }
        auto out = csv::open_output(dir / "summary.txt");
        out << s.str();
    }
}

RunEvaluation run_evaluate(const std::filesystem::path& artifact, const std::filesystem::path& out,
                           const std::optional<std::string>& expected_hash, const EvaluateOptions& options) {
    const StoredRun run = read_artifacts(artifact);
    if (expected_hash && *expected_hash != run.config_hash) {
        throw ValidationError("artifact " + artifact.string() + " was produced with config hash " + run.config_hash +
                              ", not " + *expected_hash);
    }
    RunEvaluation ev = evaluate_run(run, options);
    write_evaluation(out, ev);
    return ev;
}

namespace {

struct ProsumerData {
    std::string name;
    std::map<Timestamp, ProsumerRecord> records;
};

std::optional<ProsumerDay> prosumer_day(const ProsumerData& p, Date day, std::size_t horizon) {
    const Timestamp begin{day};
    const Timestamp end = begin + std::chrono::days{1};
    ProsumerDay out;
    for (auto it = p.records.lower_bound(begin); it != p.records.end() && it->first < end; ++it) {
        out.demand.push_back(it->second.demand_kwh);
        out.generation.push_back(it->second.generation_kwh);
    }
    if (out.horizon() != horizon) return std::nullopt;
    return out;
}

QuantileSurface select_rows(const QuantileSurface& s, const std::vector<std::size_t>& rows) {
    QuantileSurface out(s.time_at(rows.front()), s.levels, rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(s.row(rows[i]).begin(), s.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

EconomicReport run_economic(const StoredRun& run, const std::vector<std::filesystem::path>& prosumers,
                            const EconomicOptions& options, const std::filesystem::path& out) {
    options.battery.validate();
    if (options.stride == 0 || options.offset >= options.stride || kIntervalsPerDay % options.stride != 0) {
        throw ArgumentError("economic: stride must divide 288 and offset must be below it");
    }
    if (prosumers.empty()) throw ArgumentError("economic: no prosumer files");

    EconomicReport report;
    if (options.modes.empty()) {
        for (const auto mode : kEconomicModes) {
            if (mode == "point" && !options.point) continue;
            if ((mode == "qra" || mode == "qqra") && run.surfaces.count(std::string(mode)) == 0) continue;
            if (mode == "qqra_median" && run.surfaces.count("qqra") == 0) continue;
            report.modes.emplace_back(mode);
        }
    } else {
        for (const auto& mode : options.modes) {
            if (std::find(kEconomicModes.begin(), kEconomicModes.end(), mode) == kEconomicModes.end()) {
                throw ArgumentError("economic: unknown mode " + mode);
            }
            if (mode == "point" && !options.point) throw ArgumentError("economic: point mode needs a forecast file");
            const std::string surface = mode == "qqra_median" ? "qqra" : mode;
            if ((mode == "qra" || mode == "qqra" || mode == "qqra_median") && run.surfaces.count(surface) == 0) {
                throw ValidationError("economic: run has no " + surface + " forecasts");
            }
            report.modes.push_back(mode);
        }
    }

    std::vector<ProsumerData> people;
    std::set<std::string> names;
    for (const auto& path : prosumers) {
        ProsumerData p{path.stem().string(), {}};
        if (!names.insert(p.name).second) throw ArgumentError("economic: duplicate prosumer name " + p.name);
        for (const auto& r : load_prosumer_csv(path)) p.records.emplace(r.time, r);
        people.push_back(std::move(p));
    }

    const std::size_t horizon = kIntervalsPerDay / options.stride;
    const std::size_t days = run.observed.size() / kIntervalsPerDay;
    for (const auto& person : people) {
        std::map<std::string, std::pair<std::size_t, double>> totals;
        for (std::size_t d = 0; d < days; ++d) {
            const Date day = date_of(run.start) + std::chrono::days{static_cast<long>(d)};
            std::vector<std::size_t> rows;
            for (std::size_t k = options.offset; k < kIntervalsPerDay; k += options.stride) {
                rows.push_back(d * kIntervalsPerDay + k);
            }
            std::vector<double> truth;
            for (const std::size_t r : rows) truth.push_back(run.observed[r] / 1000.0);
            if (std::any_of(truth.begin(), truth.end(), [](double v) { return std::isnan(v); })) {
                report.warnings.push_back(format_date(day) + ": missing observed prices; day skipped");
                continue;
            }
            const auto pd = prosumer_day(person, day, horizon);
            if (!pd) {
                report.warnings.push_back(person.name + " " + format_date(day) + ": needs " + std::to_string(horizon) +
                                          " records; day skipped");
                continue;
            }
            for (const auto& mode : report.modes) {
                std::vector<double> prices;
                if (mode == "ground_truth") {
                    prices = truth;
                } else if (mode == "point") {
                    for (const std::size_t r : rows) {
                        const auto v = options.point->at(run.start + kStep * static_cast<long>(r));
                        if (!v) break;
                        prices.push_back(*v / 1000.0);
                    }
                } else if (mode == "qqra_median") {
                    for (const std::size_t r : rows) prices.push_back(run.surfaces.at("qqra").at(r, kMedianIndex) / 1000.0);
                } else {
                    const auto scen = expected_price_from_cdf(select_rows(run.surfaces.at(mode), rows), options.samples);
                    for (const double v : scen.expected) prices.push_back(v / 1000.0);
                }
                if (prices.size() != horizon) {
                    report.warnings.push_back(person.name + " " + format_date(day) + " " + mode +
                                              ": forecast incomplete; day skipped");
                    continue;
                }
                const BatteryPlan plan = solve_battery(build_milp(options.battery, *pd, prices), options.solver);
                const double realized = ground_truth_cost(plan, truth, options.battery.network_charge);
                report.daily.push_back({person.name, day, mode, plan.objective, realized, plan.status, plan.gap});
                auto& [count, sum] = totals[mode];
                ++count;
                sum += realized;
                if (!out.empty()) {
                    write_plan_csv(out / "plans" / person.name / mode / (format_date(day) + ".csv"),
                                   run.start + kStep * static_cast<long>(rows.front()) -
                                       kStep * static_cast<long>(options.stride - 1),
                                   kStep * static_cast<long>(options.stride), plan);
                }
            }
        }
        for (const auto& mode : report.modes) {
            const auto it = totals.find(mode);
            if (it == totals.end()) continue;
            const auto [count, sum] = it->second;
            report.weekly.push_back({person.name, mode, count, 7.0 * sum / static_cast<double>(count)});
        }
    }
    return report;
}

void write_economic(const std::filesystem::path& dir, const EconomicReport& report) {
    {
        auto out = csv::open_output(dir / "daily_cost.csv");
        out << "prosumer,date,mode,planned_aud,realized_aud,status,gap\n";
        for (const auto& r : report.daily) {
            out << r.prosumer << ',' << format_date(r.day) << ',' << r.mode << ',' << fmt(r.planned) << ','
                << fmt(r.realized) << ',' << milp::to_string(r.status) << ',' << fmt(r.gap) << '\n';
        }
    }
    {
        auto out = csv::open_output(dir / "weekly_cost.csv");
        out << "# weekly average realized cost in AUD: 7 x mean daily cost at observed prices\n";
        out << "prosumer";
        for (const auto& m : report.modes) out << ',' << m;
        out << '\n';
        std::vector<std::string> order;
        for (const auto& w : report.weekly) {
            if (std::find(order.begin(), order.end(), w.prosumer) == order.end()) order.push_back(w.prosumer);
        }
        for (const auto& p : order) {
            out << p;
            for (const auto& m : report.modes) {
                out << ',';
                for (const auto& w : report.weekly) {
                    if (w.prosumer == p && w.mode == m) out << fmt(w.weekly_average);
                }
            }
            out << '\n';
        }
    }
    if (!report.warnings.empty()) {
        auto out = csv::open_output(dir / "economic_warnings.txt");
        for (const auto& w : report.warnings) out << w << '\n';
    }
}

std::vector<std::pair<int, SummaryStats>> yearly_summary(const PriceSeries& prices) {
    std::map<int, std::vector<double>> by_year;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const std::chrono::year_month_day ymd{date_of(prices.time_at(i))};
        by_year[static_cast<int>(ymd.year())].push_back(prices.values[i]);
    }
    std::vector<std::pair<int, SummaryStats>> out;
    for (const auto& [year, values] : by_year) {
        const auto observed = std::count_if(values.begin(), values.end(), [](double v) { return !std::isnan(v); });
        if (observed < 2) continue;
        out.emplace_back(year, summary_stats(values));
    }
    return out;
}

void write_yearly_summary(const std::filesystem::path& path, const std::vector<std::pair<int, SummaryStats>>& rows) {
    auto out = csv::open_output(path);
    out << "# sd: sample standard deviation (n - 1)\n";
    out << "# mad: median absolute deviation about the median, unscaled\n";
    out << "# skew: m3 / m2^1.5 with population moments\n";
    out << "# kurtosis: m4 / m2^2 with population moments, non-excess (normal = 3)\n";
    out << "year,n,mean,sd,median,mad,skew,kurtosis,min,max\n";
    for (const auto& [year, s] : rows) {
        out << year << ',' << s.n << ',' << fmt(s.mean) << ',' << fmt(s.sd) << ',' << fmt(s.median) << ','
            << fmt(s.mad) << ',' << fmt(s.skew) << ',' << fmt(s.kurtosis) << ',' << fmt(s.min) << ','
            << fmt(s.max) << '\n';
    }
}

}  // namespace epf

#include "epf/backtest.hpp"
#include "epf/config.hpp"
#include "epf/csv.hpp"
#include "epf/report.hpp"
#include "epf/spike_filter.hpp"
#include "epf/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace epf;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string from;
    std::string to;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Run configuration file (key = value lines)");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--from", f.from, "First test day, YYYY-MM-DD");
    cmd->add_option("--to", f.to, "Last test day, YYYY-MM-DD");
    cmd->add_option("--out", f.out, "Output location");
}

RunConfig resolve_config(const CommonFlags& f, const std::string& prices = {}, const std::string& weather = {}) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (!prices.empty()) cfg.prices = prices;
    if (!weather.empty()) cfg.weather = weather;
    if (f.seed) cfg.seed = *f.seed;
    if (!f.from.empty()) cfg.from = parse_date(f.from);
    if (!f.to.empty()) cfg.to = parse_date(f.to);
    if (!f.out.empty()) cfg.out = f.out;
    cfg.validate();
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"Probabilistic 5-minute electricity price forecasting"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string prices, weather, artifact, baseline, point, reference = "qqra";
    std::vector<std::string> prosumers, modes;
    std::size_t threads = 0;
    std::size_t synth_days = 180;
    std::string synth_start = "2021-01-01";

    auto* ingest = app.add_subcommand("ingest", "Validate price and weather files onto the 5-minute grid");
    add_common(ingest, flags);
    ingest->add_option("--prices", prices, "Price CSV (timestamp,price)");
    ingest->add_option("--weather", weather, "Weather CSV");

    auto* filter = app.add_subcommand("filter", "Classify and impute price spikes");
    add_common(filter, flags);
    filter->add_option("--prices", prices, "Price CSV (timestamp,price)");

    auto* backtest = app.add_subcommand("backtest", "Daily rolling backtest");
    add_common(backtest, flags);
    backtest->add_option("--prices", prices, "Price CSV, overrides the config");
    backtest->add_option("--weather", weather, "Weather CSV, overrides the config");
    backtest->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* evaluate = app.add_subcommand("evaluate", "Forecast verification reports for a backtest artifact");
    add_common(evaluate, flags);
    evaluate->add_option("--artifact", artifact, "Backtest output directory")->required();
    evaluate->add_option("--baseline", baseline, "External point forecast CSV (timestamp,price)");
    evaluate->add_option("--reference", reference, "Model tested against the others");

    auto* economic = app.add_subcommand("economic", "Battery scheduling cost under each price forecast");
    add_common(economic, flags);
    economic->add_option("--artifact", artifact, "Backtest output directory")->required();
    economic->add_option("--prosumer", prosumers, "Prosumer CSV (timestamp,demand_kwh,generation_kwh)")->required();
    economic->add_option("--point", point, "External point forecast CSV (timestamp,price)");
    economic->add_option("--mode", modes, "ground_truth, point, qqra_median, qra, qqra");

    auto* stats = app.add_subcommand("stats", "Yearly summary statistics of a price series");
    add_common(stats, flags);
    stats->add_option("--prices", prices, "Price CSV (timestamp,price)");

    auto* synth = app.add_subcommand("synth", "Synthetic prices and weather with known quantiles");
    add_common(synth, flags);
    synth->add_option("--days", synth_days, "Number of days");
    synth->add_option("--start", synth_start, "First day, YYYY-MM-DD");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*ingest) {
        const RunConfig cfg = resolve_config(flags, prices, weather);
        const BacktestInputs in = load_inputs(cfg);
        const std::filesystem::path out = flags.out.empty() ? "ingest" : flags.out;
        write_price_csv(out / "prices.csv", in.prices);
        std::size_t missing = 0;
        for (const double v : in.prices.values) missing += std::isnan(v) ? 1 : 0;
        std::cout << "rows " << in.prices.size() << " from " << format_timestamp(in.prices.start) << " to "
                  << format_timestamp(in.prices.end_time()) << " missing " << missing << '\n';
        if (in.weather) std::cout << "weather stations " << in.weather->stations.size() << '\n';
        print_warnings(in.warnings);
        return 0;
    }
    if (*filter) {
        const RunConfig cfg = resolve_config(flags, prices);
        const auto loaded = load_price_csv(cfg.prices);
        print_warnings(loaded.warnings);
        const SpikeMask mask = filter_spikes(loaded.series, cfg.spike);
        const std::filesystem::path out = flags.out.empty() ? "filtered.csv" : flags.out;
        write_filter_csv(out, loaded.series, mask);
        std::size_t spikes = 0;
        for (const auto l : mask.labels) spikes += l == SpikeLabel::none ? 0 : 1;
        std::cout << "spikes " << spikes << " of " << mask.labels.size() << '\n';
        return 0;
    }
    if (*backtest) {
        RunConfig cfg = resolve_config(flags, prices, weather);
        if (threads != 0) cfg.threads = threads;
        try {
            const BacktestInputs in = load_inputs(cfg);
            const auto t0 = std::chrono::steady_clock::now();
            const BacktestResult result = run_backtest(cfg, in);
            write_artifacts(cfg.out, cfg, result);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cout << "test days " << result.schedule.test_days() << " (" << format_date(result.schedule.first_test_day)
                      << " to " << format_date(result.schedule.last_test_day) << ") in " << secs << " s; config "
                      << result.config_hash << " -> " << cfg.out.string() << '\n';
            if (!result.warnings.empty()) std::cerr << result.warnings.size() << " warnings in warnings.txt\n";
        } catch (const Error& e) {
            write_failure_manifest(cfg.out, cfg, e.what());
            throw;
        }
        return 0;
    }
    if (*evaluate) {
        std::optional<std::string> expected;
        if (!flags.config.empty()) expected = resolve_config(flags).hash();
        EvaluateOptions opts;
        opts.reference = reference;
        if (!baseline.empty()) opts.baseline = load_point_forecast(baseline);
        const std::filesystem::path out =
            flags.out.empty() ? std::filesystem::path(artifact) / "evaluation" : std::filesystem::path(flags.out);
        const RunEvaluation ev = run_evaluate(artifact, out, expected, opts);
        std::cout << "evaluated " << ev.models.size() << " models over " << ev.days << " days -> " << out.string()
                  << '\n';
        return 0;
    }
    if (*economic) {
        const RunConfig cfg = resolve_config(flags);
        const StoredRun stored = read_artifacts(artifact);
        if (!flags.config.empty() && stored.config_hash != cfg.hash()) {
            throw ValidationError("artifact " + artifact + " was produced with config hash " + stored.config_hash +
                                  ", not " + cfg.hash());
        }
        EconomicOptions opts;
        opts.battery = cfg.battery;
        opts.samples = cfg.price_samples;
        opts.stride = cfg.economic_stride;
        opts.offset = cfg.economic_offset;
        opts.solver.gap_tol = cfg.gap_tol;
        opts.solver.time_limit_seconds = cfg.time_limit_seconds;
        opts.modes = modes;
        if (!point.empty()) opts.point = load_point_forecast(point);
        std::vector<std::filesystem::path> files(prosumers.begin(), prosumers.end());
        const std::filesystem::path out =
            flags.out.empty() ? std::filesystem::path(artifact) / "economic" : std::filesystem::path(flags.out);
        const EconomicReport report = run_economic(stored, files, opts, out);
        write_economic(out, report);
        print_warnings(report.warnings);
        std::cout << "prosumers " << prosumers.size() << " modes " << report.modes.size() << " -> " << out.string()
                  << '\n';
        return 0;
    }
    if (*stats) {
        const RunConfig cfg = resolve_config(flags, prices);
        const auto loaded = load_price_csv(cfg.prices);
        print_warnings(loaded.warnings);
        const std::filesystem::path out = flags.out.empty() ? "stats.csv" : flags.out;
        const auto rows = yearly_summary(loaded.series);
        write_yearly_summary(out, rows);
        for (const auto& [year, s] : rows) {
            std::cout << year << " mean " << csv::format_double(s.mean) << " sd " << csv::format_double(s.sd)
                      << " mad " << csv::format_double(s.mad) << '\n';
        }
        return 0;
    }
    if (*synth) {
        SynthConfig sc;
        sc.days = synth_days;
        sc.start = parse_date(synth_start);
        if (flags.seed) sc.seed = *flags.seed;
        const std::filesystem::path out = flags.out.empty() ? "synth" : flags.out;
        write_synthetic(out, generate_synthetic(sc));
        write_prosumer_csv(out / "prosumer.csv", generate_prosumer(sc));
        std::cout << "wrote " << synth_days << " days to " << out.string() << '\n';
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

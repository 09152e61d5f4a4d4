#include "epf/config.hpp"

#include "epf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace epf {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::linear_qr: return "linear_qr";
        case ModelKind::qrf: return "qrf";
        case ModelKind::svr: return "svr";
    }
    return "unknown";
}

std::string ConstituentSpec::id() const {
    const char* prefix = kind == ModelKind::linear_qr ? "lqr" : kind == ModelKind::qrf ? "qrf" : "svr";
    return prefix + std::to_string(days);
}

namespace {

std::size_t parse_size(std::string_view text, std::string_view what) {
    text = csv::trim(text);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ArgumentError(std::string(what) + ": expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
}

double parse_number(std::string_view text, std::string_view what) {
    try {
        const double v = csv::parse_double(text, what);
        if (std::isnan(v)) throw ParseError("nan");
        return v;
    } catch (const ParseError&) {
        throw ArgumentError(std::string(what) + ": expected a number, got '" + std::string(csv::trim(text)) + "'");
    }
}

bool parse_bool(std::string_view text, std::string_view what) {
    text = csv::trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ArgumentError(std::string(what) + ": expected true or false, got '" + std::string(text) + "'");
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    while (!text.empty()) {
        const auto pos = text.find(',');
        const auto item = csv::trim(text.substr(0, pos));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
    return out;
}

std::string fmt(double v) { return csv::format_double(v); }

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> m;
        const auto size_key = [&m](const char* key, auto member) {
            m[key] = [member, key](RunConfig& c, std::string_view v) { member(c) = parse_size(v, key); };
        };
        const auto real_key = [&m](const char* key, auto member) {
            m[key] = [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number(v, key); };
        };
        m["prices"] = [](RunConfig& c, std::string_view v) { c.prices = std::string(csv::trim(v)); };
        m["weather"] = [](RunConfig& c, std::string_view v) { c.weather = std::string(csv::trim(v)); };
        m["out"] = [](RunConfig& c, std::string_view v) { c.out = std::string(csv::trim(v)); };
        m["from"] = [](RunConfig& c, std::string_view v) {
            if (csv::trim(v).empty()) c.from.reset();
            else c.from = parse_date(csv::trim(v));
        };
        m["to"] = [](RunConfig& c, std::string_view v) {
            if (csv::trim(v).empty()) c.to.reset();
            else c.to = parse_date(csv::trim(v));
        };
        m["seed"] = [](RunConfig& c, std::string_view v) { c.seed = parse_size(v, "seed"); };
        m["constituents"] = [](RunConfig& c, std::string_view v) {
            c.constituents.clear();
            for (const auto item : split_list(v)) c.constituents.push_back(parse_constituent(item));
        };
        m["ensembles"] = [](RunConfig& c, std::string_view v) {
            c.ensembles.clear();
            for (const auto item : split_list(v)) {
                if (item == "qra") c.ensembles.push_back(EnsembleKind::qra);
                else if (item == "qqra") c.ensembles.push_back(EnsembleKind::qqra);
                else throw ArgumentError("ensembles: unknown kind '" + std::string(item) + "'");
            }
        };
        m["spike.source"] = [](RunConfig& c, std::string_view v) {
            v = csv::trim(v);
            if (v == "raw") c.spike.source = ThresholdSource::raw;
            else if (v == "imputed") c.spike.source = ThresholdSource::imputed;
            else throw ArgumentError("spike.source: expected raw or imputed");
        };
        m["smoothing_order"] = [](RunConfig& c, std::string_view v) {
            c.smoothing_order = static_cast<int>(parse_size(v, "smoothing_order"));
        };
        m["features.polynomial_degree"] = [](RunConfig& c, std::string_view v) {
            c.polynomial_degree = static_cast<int>(parse_size(v, "features.polynomial_degree"));
        };
        m["features.weather"] = [](RunConfig& c, std::string_view v) { c.use_weather = parse_bool(v, "features.weather"); };
        m["qrf.bootstrap"] = [](RunConfig& c, std::string_view v) { c.forest.bootstrap = parse_bool(v, "qrf.bootstrap"); };

        size_key("threads", [](RunConfig& c) -> auto& { return c.threads; });
        size_key("ensemble_days", [](RunConfig& c) -> auto& { return c.ensemble_days; });
        size_key("ar_order", [](RunConfig& c) -> auto& { return c.ar_order; });
        size_key("spike.annual_days", [](RunConfig& c) -> auto& { return c.spike.annual_days; });
        size_key("spike.monthly_days", [](RunConfig& c) -> auto& { return c.spike.monthly_days; });
        real_key("spike.upper_level", [](RunConfig& c) -> auto& { return c.spike.upper_level; });
        real_key("spike.lower_level", [](RunConfig& c) -> auto& { return c.spike.lower_level; });
        size_key("qrf.trees", [](RunConfig& c) -> auto& { return c.forest.n_trees; });
        size_key("qrf.mtry", [](RunConfig& c) -> auto& { return c.forest.mtry; });
        size_key("qrf.min_leaf", [](RunConfig& c) -> auto& { return c.forest.min_leaf; });
        size_key("qrf.max_depth", [](RunConfig& c) -> auto& { return c.forest.max_depth; });
        size_key("qrf.max_rows", [](RunConfig& c) -> auto& { return c.forest_max_rows; });
        real_key("svr.C", [](RunConfig& c) -> auto& { return c.svr.C; });
        real_key("svr.epsilon", [](RunConfig& c) -> auto& { return c.svr.epsilon; });
        real_key("svr.gamma", [](RunConfig& c) -> auto& { return c.svr.gamma; });
        real_key("svr.tol", [](RunConfig& c) -> auto& { return c.svr.tol; });
        size_key("svr.max_rows", [](RunConfig& c) -> auto& { return c.svr.max_rows; });
        size_key("svr.max_iterations", [](RunConfig& c) -> auto& { return c.svr.max_iterations; });
        real_key("battery.efficiency", [](RunConfig& c) -> auto& { return c.battery.efficiency; });
        real_key("battery.e_min", [](RunConfig& c) -> auto& { return c.battery.e_min; });
        real_key("battery.e_max", [](RunConfig& c) -> auto& { return c.battery.e_max; });
        real_key("battery.e_init", [](RunConfig& c) -> auto& { return c.battery.e_init; });
        real_key("battery.p_max", [](RunConfig& c) -> auto& { return c.battery.p_max; });
        real_key("battery.dt", [](RunConfig& c) -> auto& { return c.battery.dt; });
        real_key("battery.network_charge", [](RunConfig& c) -> auto& { return c.battery.network_charge; });
        size_key("economic.samples", [](RunConfig& c) -> auto& { return c.price_samples; });
        size_key("economic.stride", [](RunConfig& c) -> auto& { return c.economic_stride; });
        size_key("economic.offset", [](RunConfig& c) -> auto& { return c.economic_offset; });
        real_key("economic.gap_tol", [](RunConfig& c) -> auto& { return c.gap_tol; });
        real_key("economic.time_limit", [](RunConfig& c) -> auto& { return c.time_limit_seconds; });
        return m;
    }();
    return table;
}

}  // namespace

ConstituentSpec parse_constituent(std::string_view text) {
    text = csv::trim(text);
    const auto at = text.find('@');
    if (at == std::string_view::npos) {
        throw ArgumentError("constituent '" + std::string(text) + "': expected kind@days");
    }
    const auto kind = text.substr(0, at);
    ConstituentSpec spec;
    if (kind == "linear_qr" || kind == "lqr") spec.kind = ModelKind::linear_qr;
    else if (kind == "qrf") spec.kind = ModelKind::qrf;
    else if (kind == "svr") spec.kind = ModelKind::svr;
    else throw ArgumentError("constituent '" + std::string(text) + "': unknown model kind");
    spec.days = parse_size(text.substr(at + 1), "constituent window");
    if (spec.days == 0) throw ArgumentError("constituent '" + std::string(text) + "': window must be positive");
    return spec;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    const auto& table = setters();
    const auto it = table.find(csv::trim(key));
    if (it == table.end()) throw ArgumentError("unknown config key '" + std::string(csv::trim(key)) + "'");
    it->second(config, value);
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        sv = csv::trim(sv);
        if (sv.empty()) continue;
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos) {
            throw ArgumentError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_config_value(base, sv.substr(0, eq), sv.substr(eq + 1));
        } catch (const Error& e) {
            throw ArgumentError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig cfg = parse_config(buffer.str(), std::move(base));
    // Data paths are relative to the config file.
    const auto dir = path.parent_path();
    if (!cfg.prices.empty() && cfg.prices.is_relative()) cfg.prices = dir / cfg.prices;
    if (!cfg.weather.empty() && cfg.weather.is_relative()) cfg.weather = dir / cfg.weather;
    return cfg;
}

void RunConfig::validate() const {
    std::size_t quantile_models = 0;
    std::size_t point_models = 0;
    for (const auto& c : constituents) {
        if (c.days == 0) throw ArgumentError("constituent " + c.id() + " has no window length");
        (c.is_point() ? point_models : quantile_models)++;
    }
    if (quantile_models == 0) throw ArgumentError("config: at least one quantile constituent is required");
    if (point_models > 1) throw ArgumentError("config: at most one point constituent (svr) is supported");
    for (std::size_t a = 0; a < constituents.size(); ++a) {
        for (std::size_t b = a + 1; b < constituents.size(); ++b) {
            if (constituents[a] == constituents[b]) {
                throw ArgumentError("config: duplicate constituent " + constituents[a].id());
            }
        }
    }
    if (ensembles.empty()) throw ArgumentError("config: no ensemble kinds");
    if (ensemble_days < 2) throw ArgumentError("config: ensemble_days must be at least 2");
    if (ar_order == 0) throw ArgumentError("config: ar_order must be positive");
    if (from && to && *to < *from) throw ArgumentError("config: 'to' precedes 'from'");
    if (price_samples == 0) throw ArgumentError("config: economic.samples must be positive");
    if (economic_stride == 0 || economic_offset >= economic_stride) {
        throw ArgumentError("config: economic.offset must be below economic.stride");
    }
    spike.validate();
    forest.validate();
    svr.validate();
    battery.validate();
    if (smoothing_order < 2 || smoothing_order % 2 != 0) {
        throw ArgumentError("config: smoothing_order must be even and at least 2");
    }
}

std::string RunConfig::canonical() const {
    std::map<std::string, std::string> kv;
    kv["prices"] = prices.generic_string();
    kv["weather"] = weather.generic_string();
    kv["from"] = from ? format_date(*from) : "";
    kv["to"] = to ? format_date(*to) : "";
    kv["seed"] = std::to_string(seed);
    std::string list;
    for (const auto& c : constituents) {
        list += (list.empty() ? "" : ",") + std::string(to_string(c.kind)) + "@" + std::to_string(c.days);
    }
    kv["constituents"] = list;
    list.clear();
    for (const auto k : ensembles) list += (list.empty() ? "" : ",") + std::string(to_string(k));
    kv["ensembles"] = list;
    kv["ensemble_days"] = std::to_string(ensemble_days);
    kv["spike.annual_days"] = std::to_string(spike.annual_days);
    kv["spike.monthly_days"] = std::to_string(spike.monthly_days);
    kv["spike.upper_level"] = fmt(spike.upper_level);
    kv["spike.lower_level"] = fmt(spike.lower_level);
    kv["spike.source"] = spike.source == ThresholdSource::raw ? "raw" : "imputed";
    kv["smoothing_order"] = std::to_string(smoothing_order);
    kv["ar_order"] = std::to_string(ar_order);
    kv["features.polynomial_degree"] = std::to_string(polynomial_degree);
    kv["features.weather"] = use_weather ? "true" : "false";
    kv["qrf.trees"] = std::to_string(forest.n_trees);
    kv["qrf.mtry"] = std::to_string(forest.mtry);
    kv["qrf.min_leaf"] = std::to_string(forest.min_leaf);
    kv["qrf.max_depth"] = std::to_string(forest.max_depth);
    kv["qrf.bootstrap"] = forest.bootstrap ? "true" : "false";
    kv["qrf.max_rows"] = std::to_string(forest_max_rows);
    kv["svr.C"] = fmt(svr.C);
    kv["svr.epsilon"] = fmt(svr.epsilon);
    kv["svr.gamma"] = fmt(svr.gamma);
    kv["svr.tol"] = fmt(svr.tol);
    kv["svr.max_rows"] = std::to_string(svr.max_rows);
    kv["svr.max_iterations"] = std::to_string(svr.max_iterations);
    kv["battery.efficiency"] = fmt(battery.efficiency);
    kv["battery.e_min"] = fmt(battery.e_min);
    kv["battery.e_max"] = fmt(battery.e_max);
    kv["battery.e_init"] = fmt(battery.e_init);
    kv["battery.p_max"] = fmt(battery.p_max);
    kv["battery.dt"] = fmt(battery.dt);
    kv["battery.network_charge"] = fmt(battery.network_charge);
    kv["economic.samples"] = std::to_string(price_samples);
    kv["economic.stride"] = std::to_string(economic_stride);
    kv["economic.offset"] = std::to_string(economic_offset);
    kv["economic.gap_tol"] = fmt(gap_tol);
    kv["economic.time_limit"] = fmt(time_limit_seconds);

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace epf

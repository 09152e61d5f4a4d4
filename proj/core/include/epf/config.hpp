#pragma once

#include "epf/data_pipeline.hpp"
#include "epf/economic.hpp"
#include "epf/ensemble.hpp"
#include "epf/qrf.hpp"
#include "epf/spike_filter.hpp"
#include "epf/svr.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epf {

enum class ModelKind { linear_qr, qrf, svr };

std::string_view to_string(ModelKind kind);

/// One constituent model trained on a trailing window of `days`.
struct ConstituentSpec {
    ModelKind kind = ModelKind::qrf;
    std::size_t days = 30;

    /// e.g. "qrf30".
    [[nodiscard]] std::string id() const;
    /// SVR produces a point forecast, the others nine quantiles.
    [[nodiscard]] bool is_point() const { return kind == ModelKind::svr; }
    friend bool operator==(const ConstituentSpec&, const ConstituentSpec&) = default;
};

/// Parses "qrf@30" (also "linear_qr@365", "svr@365").
ConstituentSpec parse_constituent(std::string_view text);

struct RunConfig {
    std::filesystem::path prices;
    std::filesystem::path weather;
    std::optional<Date> from;
    std::optional<Date> to;
    std::uint64_t seed = 42;
    std::filesystem::path out = "run";
    /// 0 uses the hardware concurrency. Does not affect results.
    std::size_t threads = 0;

    std::vector<ConstituentSpec> constituents{{ModelKind::linear_qr, 365},
                                              {ModelKind::qrf, 30},
                                              {ModelKind::qrf, 90},
                                              {ModelKind::qrf, 365},
                                              {ModelKind::svr, 365}};
    std::vector<EnsembleKind> ensembles{EnsembleKind::qra, EnsembleKind::qqra};
    std::size_t ensemble_days = 35;

    SpikeConfig spike;
    int smoothing_order = 12;
    std::size_t ar_order = 2;
    int polynomial_degree = 6;
    bool use_weather = true;

    ForestParams forest;
    /// Forest training rows beyond this are thinned by an even stride (0 keeps all).
    std::size_t forest_max_rows = 0;
    SvrParams svr;

    BatteryParams battery;
    std::size_t price_samples = 100;
    std::size_t economic_stride = 6;
    std::size_t economic_offset = 5;
    double gap_tol = 1e-6;
    double time_limit_seconds = 60.0;

    /// Throws ArgumentError on inconsistent settings.
    void validate() const;

    /// Sorted `key = value` lines for every setting that can change results (all keys
    /// except `out` and `threads`).
    [[nodiscard]] std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    [[nodiscard]] std::string hash() const;
};

/// Applies `key = value` lines ('#' starts a comment). Unknown keys and bad values
/// are ArgumentErrors naming the line.
RunConfig parse_config(std::string_view text, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Sets one key; the same vocabulary as parse_config.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace epf

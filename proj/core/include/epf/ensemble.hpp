#pragma once

#include "epf/common.hpp"
#include "epf/linear_qr.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epf {

enum class EnsembleKind { qra, qqra };

std::string_view to_string(EnsembleKind kind);

/// Constituent forecasts over a common block of timestamps. Quantile constituents
/// must share start, levels and row count; the optional point forecast is aligned
/// with them.
struct ConstituentSet {
    std::vector<std::string> ids;
    std::vector<QuantileSurface> surfaces;
    std::string point_id;
    std::vector<double> point;

    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] Timestamp start() const;
    /// Throws ValidationError naming the first constituent that is out of line.
    void validate() const;
};

/// Column names of the regressor matrix, intercept first.
std::vector<std::string> input_manifest(EnsembleKind kind, const ConstituentSet& set);

/// Regressors at one level: intercept, then each quantile constituent (its median for
/// QRA, its level-q value for Q-QRA), then the point forecast. At q = 0.5 both kinds
/// therefore see identical rows.
RowMatrix assemble_inputs(EnsembleKind kind, const ConstituentSet& set, double level);

struct LevelCoefficients {
    double level = 0.5;
    Eigen::VectorXd coefficients;
    double objective = 0.0;
    std::size_t rows_used = 0;
};

struct EnsembleModel {
    EnsembleKind kind = EnsembleKind::qqra;
    std::vector<std::string> manifest;
    std::vector<LevelCoefficients> levels;
    std::vector<std::string> warnings;
};

/// One independent quantile regression per level of the constituents' surfaces.
/// Rows whose target is missing are dropped. Throws ArgumentError when fewer rows
/// than inputs remain.
EnsembleModel fit_ensemble(EnsembleKind kind, const ConstituentSet& training, std::span<const double> target);

/// Raw per-level predictions, before any reordering. Throws ValidationError when the
/// manifest does not match the inputs.
QuantileSurface predict_ensemble_raw(const EnsembleModel& model, const ConstituentSet& inputs);

/// Sorts each row so quantiles are nondecreasing in level.
void rearrange(QuantileSurface& surface);

/// predict_ensemble_raw followed by rearrangement.
QuantileSurface predict_ensemble(const EnsembleModel& model, const ConstituentSet& inputs);

}  // namespace epf

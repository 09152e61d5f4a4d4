#include "epf/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace epf {

std::string_view to_string(EnsembleKind kind) { return kind == EnsembleKind::qra ? "qra" : "qqra"; }

std::size_t ConstituentSet::rows() const {
    if (!surfaces.empty()) return surfaces.front().rows();
    return point.size();
}

Timestamp ConstituentSet::start() const { return surfaces.empty() ? Timestamp{} : surfaces.front().start; }

void ConstituentSet::validate() const {
    if (ids.size() != surfaces.size()) {
        throw ValidationError("ensemble inputs: " + std::to_string(ids.size()) + " ids for " +
                              std::to_string(surfaces.size()) + " surfaces");
    }
    if (surfaces.empty() && point.empty()) throw ValidationError("ensemble inputs: no constituents");
    if (surfaces.empty()) return;
    const auto& ref = surfaces.front();
    for (std::size_t i = 1; i < surfaces.size(); ++i) {
        const auto& s = surfaces[i];
        if (s.start != ref.start) {
            throw ValidationError("ensemble inputs: " + ids[i] + " starts at " + format_timestamp(s.start) +
                                  ", expected " + format_timestamp(ref.start));
        }
        if (s.levels != ref.levels) throw ValidationError("ensemble inputs: " + ids[i] + " has different levels");
        if (s.rows() != ref.rows()) {
            throw ValidationError("ensemble inputs: " + ids[i] + " has " + std::to_string(s.rows()) +
                                  " rows, expected " + std::to_string(ref.rows()) + " (first mismatch at " +
                                  format_timestamp(ref.time_at(std::min(s.rows(), ref.rows()))) + ")");
        }
    }
    if (!point.empty() && point.size() != ref.rows()) {
        throw ValidationError("ensemble inputs: point forecast " + point_id + " has " + std::to_string(point.size()) +
                              " rows, expected " + std::to_string(ref.rows()) + " (first mismatch at " +
                              format_timestamp(ref.time_at(std::min(point.size(), ref.rows()))) + ")");
    }
}

std::vector<std::string> input_manifest(EnsembleKind kind, const ConstituentSet& set) {
    std::vector<std::string> names{"intercept"};
    for (const auto& id : set.ids) names.push_back(kind == EnsembleKind::qra ? id + ":median" : id + ":q");
    if (!set.point.empty()) names.push_back(set.point_id + ":point");
    return names;
}

RowMatrix assemble_inputs(EnsembleKind kind, const ConstituentSet& set, double level) {
    set.validate();
    const std::size_t n = set.rows();
    const auto width = static_cast<Eigen::Index>(1 + set.surfaces.size() + (set.point.empty() ? 0 : 1));
    RowMatrix X(static_cast<Eigen::Index>(n), width);
    std::vector<std::size_t> cols;
    for (const auto& s : set.surfaces) cols.push_back(s.level_index(kind == EnsembleKind::qra ? 0.5 : level));
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        X(row, 0) = 1.0;
        Eigen::Index c = 1;
        for (std::size_t k = 0; k < set.surfaces.size(); ++k) X(row, c++) = set.surfaces[k].at(r, cols[k]);
        if (!set.point.empty()) X(row, c) = set.point[r];
    }
    return X;
}

namespace {

std::vector<double> ensemble_levels(const ConstituentSet& set) {
    if (!set.surfaces.empty()) return set.surfaces.front().levels;
    return standard_levels();
}

}  // namespace

EnsembleModel fit_ensemble(EnsembleKind kind, const ConstituentSet& training, std::span<const double> target) {
    training.validate();
    if (target.size() != training.rows()) {
        throw ValidationError("ensemble fit: target has " + std::to_string(target.size()) + " rows, inputs have " +
                              std::to_string(training.rows()));
    }
    std::vector<Eigen::Index> keep;
    std::vector<double> y;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (std::isnan(target[i])) continue;
        keep.push_back(static_cast<Eigen::Index>(i));
        y.push_back(target[i]);
    }

    EnsembleModel model;
    model.kind = kind;
    model.manifest = input_manifest(kind, training);
    const auto width = model.manifest.size();
    if (keep.size() < width) {
        throw ArgumentError("ensemble fit: " + std::to_string(keep.size()) + " usable rows for " +
                            std::to_string(width) + " inputs");
    }
    for (double q : ensemble_levels(training)) {
        const RowMatrix all = assemble_inputs(kind, training, q);
        RowMatrix X(static_cast<Eigen::Index>(keep.size()), all.cols());
        for (std::size_t i = 0; i < keep.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = all.row(keep[i]);
        auto fit = fit_qr(X, y, q);
        for (auto& w : fit.warnings) model.warnings.push_back(std::string(to_string(kind)) + " q=" + std::to_string(q) + ": " + w);
        model.levels.push_back({q, std::move(fit.coefficients), fit.objective, keep.size()});
    }
    return model;
}

QuantileSurface predict_ensemble_raw(const EnsembleModel& model, const ConstituentSet& inputs) {
    inputs.validate();
    const auto manifest = input_manifest(model.kind, inputs);
    if (manifest != model.manifest) {
        std::size_t i = 0;
        while (i < manifest.size() && i < model.manifest.size() && manifest[i] == model.manifest[i]) ++i;
        const std::string got = i < manifest.size() ? manifest[i] : "<none>";
        const std::string want = i < model.manifest.size() ? model.manifest[i] : "<none>";
        throw ValidationError("ensemble predict: input " + std::to_string(i) + " is " + got + ", model expects " + want);
    }
    std::vector<double> levels;
    for (const auto& l : model.levels) levels.push_back(l.level);
    QuantileSurface out(inputs.start(), levels, inputs.rows());
    for (std::size_t c = 0; c < model.levels.size(); ++c) {
        const RowMatrix X = assemble_inputs(model.kind, inputs, model.levels[c].level);
        const Eigen::VectorXd pred = X * model.levels[c].coefficients;
        for (std::size_t r = 0; r < out.rows(); ++r) out.at(r, c) = pred[static_cast<Eigen::Index>(r)];
    }
    return out;
}

void rearrange(QuantileSurface& surface) {
    for (std::size_t r = 0; r < surface.rows(); ++r) {
        auto row = surface.row(r);
        std::sort(row.begin(), row.end());
    }
}

QuantileSurface predict_ensemble(const EnsembleModel& model, const ConstituentSet& inputs) {
    auto out = predict_ensemble_raw(model, inputs);
    rearrange(out);
    return out;
}

}  // namespace epf

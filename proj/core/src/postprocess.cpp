#include "epf/postprocess.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace epf {

std::vector<double> centered_ma_weights(int order) {
    if (order < 2 || order % 2 != 0) {
        throw ArgumentError("centered moving average: order must be even and at least 2, got " +
                            std::to_string(order));
    }
    std::vector<double> w(static_cast<std::size_t>(order) + 1, 1.0 / order);
    w.front() = w.back() = 0.5 / order;
    return w;
}

std::vector<double> smooth_series(std::span<const double> values, int order) {
    const auto w = centered_ma_weights(order);
    const long half = order / 2;
    const long n = static_cast<long>(values.size());
    std::vector<double> out(values.size());
    for (long t = 0; t < n; ++t) {
        double num = 0.0, den = 0.0;
        for (long k = -half; k <= half; ++k) {
            const long s = t + k;
            if (s < 0 || s >= n) continue;
            const double wk = w[static_cast<std::size_t>(k + half)];
            num += wk * values[static_cast<std::size_t>(s)];
            den += wk;
        }
        out[static_cast<std::size_t>(t)] = num / den;
    }
    return out;
}

QuantileSurface smooth_centered_ma(const QuantileSurface& surface, int order, std::size_t block) {
    QuantileSurface out = surface;
    const std::size_t rows = surface.rows();
    const std::size_t step = block == 0 ? rows : block;
    std::vector<double> col;
    for (std::size_t begin = 0; begin < rows; begin += step) {
        const std::size_t end = std::min(rows, begin + step);
        for (std::size_t c = 0; c < surface.cols(); ++c) {
            col.clear();
            for (std::size_t r = begin; r < end; ++r) col.push_back(surface.at(r, c));
            const auto s = smooth_series(col, order);
            for (std::size_t r = begin; r < end; ++r) out.at(r, c) = s[r - begin];
        }
    }
    return out;
}

double companion_spectral_radius(std::span<const double> phi) {
    const auto p = static_cast<Eigen::Index>(phi.size());
    if (p == 0) return 0.0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) C(0, k) = phi[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 1; k < p; ++k) C(k, k - 1) = 1.0;
    return Eigen::EigenSolver<Eigen::MatrixXd>(C, false).eigenvalues().cwiseAbs().maxCoeff();
}

ArModel fit_ar_residual(std::span<const double> residuals, std::size_t p) {
    if (p == 0) throw ArgumentError("AR fit: order must be positive");
    if (residuals.size() < 10 * p) {
        throw ArgumentError("AR fit: need at least " + std::to_string(10 * p) + " residuals for order " +
                            std::to_string(p) + ", have " + std::to_string(residuals.size()));
    }
    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd XtX = Eigen::MatrixXd::Zero(P, P);
    Eigen::VectorXd Xty = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd lagged(P);
    std::size_t used = 0;
    for (std::size_t t = p; t < residuals.size(); ++t) {
        bool ok = !std::isnan(residuals[t]);
        for (std::size_t k = 0; k < p && ok; ++k) {
            lagged[static_cast<Eigen::Index>(k)] = residuals[t - 1 - k];
            ok = !std::isnan(lagged[static_cast<Eigen::Index>(k)]);
        }
        if (!ok) continue;
        XtX.selfadjointView<Eigen::Lower>().rankUpdate(lagged);
        Xty += lagged * residuals[t];
        ++used;
    }
    XtX = XtX.selfadjointView<Eigen::Lower>();

    ArModel model;
    model.phi.assign(p, 0.0);
    if (XtX.cwiseAbs().maxCoeff() == 0.0) return model;  // zero signal
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XtX);
    qr.setThreshold(1e-12);
    if (used < p || qr.rank() < P) {
        throw ValidationError("AR fit: singular normal equations for order " + std::to_string(p) +
                              "; try a smaller order");
    }
    const Eigen::VectorXd phi = qr.solve(Xty);
    for (std::size_t k = 0; k < p; ++k) model.phi[k] = phi[static_cast<Eigen::Index>(k)];
    model.spectral_radius = companion_spectral_radius(model.phi);
    return model;
}

std::vector<double> ar_forecast(const ArModel& model, std::span<const double> anchor, std::size_t horizon) {
    const std::size_t p = model.order();
    // history[0] is the most recent value.
    std::vector<double> history(p, 0.0);
    for (std::size_t k = 0; k < p && k < anchor.size(); ++k) {
        const double v = anchor[anchor.size() - 1 - k];
        history[k] = std::isnan(v) ? 0.0 : v;
    }
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        double f = 0.0;
        for (std::size_t k = 0; k < p; ++k) f += model.phi[k] * history[k];
        out[h] = f;
        for (std::size_t k = p; k-- > 1;) history[k] = history[k - 1];
        if (p > 0) history[0] = f;
    }
    return out;
}

QuantileSurface shift_quantiles(const QuantileSurface& smoothed, const ArModel& model,
                                std::span<const double> anchor, std::vector<std::string>* warnings) {
    if (!model.stable() && warnings != nullptr) {
        std::ostringstream msg;
        msg << "AR residual model is not stable (spectral radius " << model.spectral_radius << ")";
        warnings->push_back(msg.str());
    }
    const auto shift = ar_forecast(model, anchor, smoothed.rows());
    QuantileSurface out = smoothed;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (auto& v : out.row(r)) v += shift[r];
    }
    return out;
}

}  // namespace epf

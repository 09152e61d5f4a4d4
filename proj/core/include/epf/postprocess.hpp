#pragma once

#include "epf/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace epf {

/// Taps of the 2 x `order` centered moving average: order+1 weights, the two end
/// taps at 1/(2*order) and the rest at 1/order. `order` must be even and >= 2.
std::vector<double> centered_ma_weights(int order);

/// Applies the centered MA; near the ends the window is truncated and its weights
/// renormalized.
std::vector<double> smooth_series(std::span<const double> values, int order);

/// Smooths every quantile column independently within consecutive blocks of
/// `block` rows (one forecast day by default). block = 0 smooths the whole surface.
QuantileSurface smooth_centered_ma(const QuantileSurface& surface, int order = 12,
                                   std::size_t block = kIntervalsPerDay);

struct ArModel {
    std::vector<double> phi;  // phi[0] multiplies the most recent value
    double spectral_radius = 0.0;

    [[nodiscard]] std::size_t order() const { return phi.size(); }
    [[nodiscard]] bool stable() const { return spectral_radius < 1.0; }
};

/// Least-squares AR(p) without intercept. Equations touching a missing (NaN)
/// residual are skipped. Throws ArgumentError when fewer than 10p residuals are
/// given and ValidationError when the normal equations are singular.
ArModel fit_ar_residual(std::span<const double> residuals, std::size_t p);

/// Largest modulus among the companion-matrix eigenvalues.
double companion_spectral_radius(std::span<const double> phi);

/// Recursive forecasts for k = 1..horizon. `anchor` holds the latest values, oldest
/// first; missing entries count as zero.
std::vector<double> ar_forecast(const ArModel& model, std::span<const double> anchor, std::size_t horizon);

/// Adds the AR forecast for k = 1..rows to every quantile in row k-1. An unstable
/// model adds a message to `warnings` and the shift is applied as computed.
QuantileSurface shift_quantiles(const QuantileSurface& smoothed, const ArModel& model,
                                std::span<const double> anchor, std::vector<std::string>* warnings = nullptr);

}  // namespace epf

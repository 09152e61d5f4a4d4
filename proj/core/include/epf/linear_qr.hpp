#pragma once

#include "epf/data_pipeline.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace epf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct QrModel {
    double level = 0.5;
    Eigen::VectorXd coefficients;
    /// Sum of pinball losses at the fitted coefficients.
    double objective = 0.0;
    std::vector<std::string> warnings;
};

struct QrFitOptions {
    /// Coefficients used to pick the starting vertex (e.g. the previous day's fit).
    const Eigen::VectorXd* warm_start = nullptr;
};

/// Minimizes the summed pinball loss over linear coefficients. The problem is solved
/// through its bounded dual, min -y'd s.t. X'd = 0, q-1 <= d <= q, whose row duals are
/// the negated coefficients. Throws ArgumentError for q outside (0,1) or too few rows,
/// SolverError if the simplex does not terminate. Columns that are linearly dependent
/// on earlier ones (rank-revealing QR of the scaled design) get zero coefficients.
QrModel fit_qr(const RowMatrix& X, std::span<const double> y, double q, const QrFitOptions& options = {});

/// X * beta. Throws ArgumentError on width mismatch.
Eigen::VectorXd predict_qr(const QrModel& model, const RowMatrix& X);

double pinball_sum(std::span<const double> y, std::span<const double> fitted, double q);

}  // namespace epf

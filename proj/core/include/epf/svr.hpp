#pragma once

#include "epf/linear_qr.hpp"

#include <cstdint>
#include <vector>

namespace epf {

struct SvrParams {
    double C = 10.0;
    double epsilon = 1.0;
    /// RBF width on standardized inputs; 0 means 1/m.
    double gamma = 0.0;
    double tol = 1e-3;
    /// Training rows beyond this are thinned by an even stride (0 keeps all rows).
    std::size_t max_rows = 2000;
    std::size_t max_iterations = 0;  // 0: max(10^7, 100 n)

    void validate() const;
};

struct SvrModel {
    RowMatrix support;          // standardized training rows
    Eigen::VectorXd coef;       // alpha_i - alpha*_i, one per row of `support`
    double bias = 0.0;
    double gamma = 1.0;
    double C = 0.0;
    double epsilon = 0.0;
    Eigen::VectorXd mean;       // per-feature standardization
    Eigen::VectorXd scale;
    double dual_objective = 0.0;
    std::size_t iterations = 0;
};

/// exp(-gamma * |a - b|^2).
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// epsilon-SVR with an RBF kernel, dual solved by SMO with second-order working-set
/// selection. `seed` permutes the scan order, which fixes tie-breaking among equally
/// violating pairs. Throws SolverError carrying the largest KKT violation when the
/// iteration budget runs out.
SvrModel fit_svr(const RowMatrix& X, std::span<const double> y, const SvrParams& params, std::uint64_t seed);

Eigen::VectorXd predict_svr(const SvrModel& model, const RowMatrix& X);

/// Dual objective 1/2 b'Kb + eps*sum|b| - y'b for coefficients b = alpha - alpha*.
double svr_dual_objective(const RowMatrix& Z, std::span<const double> y, const Eigen::VectorXd& coef, double gamma,
                          double epsilon);

}  // namespace epf

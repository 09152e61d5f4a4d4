#include "epf/linear_qr.hpp"

#include "epf/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace epf {

constexpr Eigen::Index kInteriorPointRows = 1000;

double pinball_sum(std::span<const double> y, std::span<const double> fitted, double q) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - fitted[i];
        total += r >= 0.0 ? q * r : (q - 1.0) * r;
    }
    return total;
}

namespace {

// Primal-dual interior point (Mehrotra predictor-corrector) for
//   min c'x  s.t.  A x = b,  0 <= x <= 1
// started from the feasible interior point x = x0. Returns the row duals, which
// are only used to choose the simplex starting vertex.
Eigen::VectorXd interior_point_duals(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, double x0,
                                     std::size_t max_iterations = 60, double gap_tol = 1e-9) {
    const Eigen::Index n = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, x0);
    Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 1.0 - x0);
    const Eigen::VectorXd b = A * x;

    // Least-squares duals, then split the reduced costs into positive parts.
    Eigen::VectorXd beta = (A * A.transpose()).ldlt().solve(A * c);
    Eigen::VectorXd t = c - A.transpose() * beta;
    const double shift = std::max(1e-3, 0.1 * t.cwiseAbs().mean());
    Eigen::VectorXd z = t.cwiseMax(0.0).array() + shift;
    Eigen::VectorXd w = (-t).cwiseMax(0.0).array() + shift;

    const auto step_to_boundary = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
        double alpha = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
        }
        return alpha;
    };

    for (std::size_t it = 0; it < max_iterations; ++it) {
        const double primal = c.dot(x);
        const double dual = b.dot(beta) - w.sum();
        if (std::abs(primal - dual) <= gap_tol * (1.0 + std::abs(primal))) break;

        const Eigen::VectorXd rp = b - A * x;
        const Eigen::VectorXd rd = c - A.transpose() * beta - z + w;
        const Eigen::VectorXd d = (z.cwiseQuotient(x) + w.cwiseQuotient(s)).cwiseInverse();
        const Eigen::MatrixXd M = A * d.asDiagonal() * A.transpose();
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);

        const auto solve_direction = [&](const Eigen::VectorXd& rxz, const Eigen::VectorXd& rsw, Eigen::VectorXd& dx,
                                         Eigen::VectorXd& dbeta, Eigen::VectorXd& dz, Eigen::VectorXd& dw) {
            const Eigen::VectorXd rho = rxz.cwiseQuotient(x) - rsw.cwiseQuotient(s) - rd;
            dbeta = ldlt.solve(rp - A * d.cwiseProduct(rho));
            dx = d.cwiseProduct(A.transpose() * dbeta + rho);
            dz = (rxz - z.cwiseProduct(dx)).cwiseQuotient(x);
            dw = (rsw + w.cwiseProduct(dx)).cwiseQuotient(s);
        };

        Eigen::VectorXd dx, dbeta, dz, dw;
        const Eigen::VectorXd xz = x.cwiseProduct(z);
        const Eigen::VectorXd sw = s.cwiseProduct(w);
        solve_direction(-xz, -sw, dx, dbeta, dz, dw);
        const double ap = std::min(step_to_boundary(x, dx), step_to_boundary(s, -dx));
        const double ad = std::min(step_to_boundary(z, dz), step_to_boundary(w, dw));
        const double mu = (xz.sum() + sw.sum()) / static_cast<double>(2 * n);
        const double mu_aff = ((x + ap * dx).cwiseProduct(z + ad * dz).sum() +
                               (s - ap * dx).cwiseProduct(w + ad * dw).sum()) /
                              static_cast<double>(2 * n);
        const double sigma = std::pow(mu_aff / mu, 3.0);

        const Eigen::VectorXd rxz = (sigma * mu - xz.array() - dx.array() * dz.array()).matrix();
        const Eigen::VectorXd rsw = (sigma * mu - sw.array() + dx.array() * dw.array()).matrix();
        solve_direction(rxz, rsw, dx, dbeta, dz, dw);
        const double sp = 0.99995 * std::min({1.0, step_to_boundary(x, dx), step_to_boundary(s, -dx)});
        const double sd = 0.99995 * std::min({1.0, step_to_boundary(z, dz), step_to_boundary(w, dw)});
        x += sp * dx;
        s = (1.0 - x.array()).matrix();
        beta += sd * dbeta;
        z += sd * dz;
        w += sd * dw;
        if (!beta.allFinite()) break;
    }
    return beta;
}

}  // namespace

QrModel fit_qr(const RowMatrix& X, std::span<const double> y, double q, const QrFitOptions& options) {
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("fit_qr: level must lie in (0,1)");
    const auto n = X.rows();
    const auto m = X.cols();
    if (static_cast<std::size_t>(n) != y.size()) throw ArgumentError("fit_qr: X and y row counts differ");
    if (n < m || n == 0) {
        throw ArgumentError("fit_qr: need at least as many rows as columns (" + std::to_string(n) + " < " +
                            std::to_string(m) + ")");
    }
    if (!X.allFinite()) throw ArgumentError("fit_qr: design matrix has non-finite entries");
    for (double v : y) {
        if (!std::isfinite(v)) throw ArgumentError("fit_qr: target has non-finite entries");
    }

    QrModel model;
    model.level = q;
    model.coefficients = Eigen::VectorXd::Zero(m);

    const bool all_equal = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    const bool intercept_first = m > 0 && (X.col(0).array() == 1.0).all();
    if (all_equal && intercept_first) {
        model.coefficients[0] = y[0];
        model.objective = 0.0;
        return model;
    }

    // Column scaling of X keeps the constraint rows of the dual comparable in size.
    Eigen::VectorXd scale(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double mx = X.col(k).cwiseAbs().maxCoeff();
        scale[k] = mx > 0.0 ? 1.0 / mx : 1.0;
    }
    const Eigen::MatrixXd Xs = X * scale.asDiagonal();

    // Linearly dependent columns would make dual rows redundant; they are fixed at zero.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_qr(Xs);
    rank_qr.setThreshold(1e-10);
    std::vector<Eigen::Index> keep(static_cast<std::size_t>(rank_qr.rank()));
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = rank_qr.colsPermutation().indices()[static_cast<Eigen::Index>(k)];
    std::sort(keep.begin(), keep.end());
    const auto r = static_cast<Eigen::Index>(keep.size());
    if (r < m) {
        std::string dropped;
        for (Eigen::Index k = 0, i = 0; k < m; ++k) {
            if (i < r && keep[static_cast<std::size_t>(i)] == k) ++i;
            else dropped += (dropped.empty() ? "" : ",") + std::to_string(k);
        }
        model.warnings.push_back("fit_qr: rank-deficient design; columns " + dropped + " fixed at zero");
    }

    lp::Problem lp;
    lp.A.resize(r, n);
    for (Eigen::Index k = 0; k < r; ++k) lp.A.row(k) = Xs.col(keep[static_cast<std::size_t>(k)]).transpose();
    lp.b = Eigen::VectorXd::Zero(r);
    lp.c = -Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    lp.lower = Eigen::VectorXd::Constant(n, q - 1.0);
    lp.upper = Eigen::VectorXd::Constant(n, q);

    std::vector<bool> at_upper(static_cast<std::size_t>(n));
    if (options.warm_start != nullptr && options.warm_start->size() == m) {
        const Eigen::VectorXd fitted = X * *options.warm_start;
        for (Eigen::Index i = 0; i < n; ++i) at_upper[static_cast<std::size_t>(i)] = y[i] > fitted[i];
    } else if (n >= kInteriorPointRows) {
        // Start the simplex at the sign pattern of an interior-point estimate.
        const Eigen::VectorXd duals = interior_point_duals(lp.A, lp.c, 1.0 - q);
        const Eigen::VectorXd fitted = -(lp.A.transpose() * duals);
        for (Eigen::Index i = 0; i < n; ++i) at_upper[static_cast<std::size_t>(i)] = duals.allFinite() && y[i] > fitted[i];
        if (!duals.allFinite()) {
            for (Eigen::Index i = 0; i < n; ++i) at_upper[static_cast<std::size_t>(i)] = y[i] > fitted.mean();
        }
    } else {
        std::vector<double> sorted(y.begin(), y.end());
        const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(n - 1)));
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k), sorted.end());
        const double pivot = sorted[k];
        for (Eigen::Index i = 0; i < n; ++i) at_upper[static_cast<std::size_t>(i)] = y[i] > pivot;
    }

    const lp::Result res = lp::solve(lp, {}, at_upper);
    if (res.status != lp::Status::optimal) {
        throw SolverError(std::string("fit_qr: simplex ended with status ") + lp::to_string(res.status));
    }
    for (Eigen::Index k = 0; k < r; ++k) {
        const Eigen::Index col = keep[static_cast<std::size_t>(k)];
        model.coefficients[col] = -scale[col] * res.duals[k];
    }
    if (res.redundant_rows) {
        model.warnings.emplace_back("fit_qr: numerically redundant constraints remained in the basis");
    }
    if (!model.coefficients.allFinite()) throw SolverError("fit_qr: non-finite coefficients");
    const Eigen::VectorXd fitted = X * model.coefficients;
    model.objective = pinball_sum(y, {fitted.data(), static_cast<std::size_t>(n)}, q);
    return model;
}

Eigen::VectorXd predict_qr(const QrModel& model, const RowMatrix& X) {
    if (X.cols() != model.coefficients.size()) {
        throw ArgumentError("predict_qr: matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                            std::to_string(model.coefficients.size()));
    }
    return X * model.coefficients;
}

}  // namespace epf

#include "epf/svr.hpp"

#include "epf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace epf {

void SvrParams::validate() const {
    if (!(C > 0.0)) throw ArgumentError("svr: C must be positive");
    if (!(epsilon > 0.0)) throw ArgumentError("svr: epsilon must be positive");
    if (gamma < 0.0) throw ArgumentError("svr: gamma must be positive");
    if (!(tol > 0.0)) throw ArgumentError("svr: tol must be positive");
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
    return std::exp(-gamma * d2);
}

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd kernel_matrix(const RowMatrix& A, const RowMatrix& B, double gamma) {
    const Eigen::VectorXd na = A.rowwise().squaredNorm();
    const Eigen::VectorXd nb = B.rowwise().squaredNorm();
    Eigen::MatrixXd K = -2.0 * (A * B.transpose());
    K.colwise() += na;
    K.rowwise() += nb.transpose();
    return (-gamma * K.cwiseMax(0.0)).array().exp().matrix();
}

class Smo {
public:
    Smo(const Eigen::MatrixXd& K, std::span<const double> y, double C, double eps)
        : K_(K), l_(static_cast<std::size_t>(K.rows())), C_(C) {
        const std::size_t n = 2 * l_;
        alpha_.assign(n, 0.0);
        G_.resize(n);
        sign_.resize(n);
        for (std::size_t t = 0; t < l_; ++t) {
            sign_[t] = 1;
            sign_[t + l_] = -1;
            G_[t] = eps - y[t];
            G_[t + l_] = eps + y[t];
        }
        row_i_.resize(n);
        row_j_.resize(n);
    }

    // Returns iterations used, or throws when `max_iter` is exhausted.
    std::size_t solve(double tol, std::size_t max_iter) {
        std::size_t iter = 0;
        while (true) {
            std::size_t i = 0, j = 0;
            double violation = 0.0;
            if (select(tol, i, j, violation)) return iter;
            if (iter >= max_iter) {
                std::ostringstream msg;
                msg << "svr: no convergence after " << iter << " iterations; max KKT violation " << violation;
                throw SolverError(msg.str());
            }
            ++iter;
            update(i, j);
        }
    }

    [[nodiscard]] Eigen::VectorXd coefficients() const {
        Eigen::VectorXd b(static_cast<Eigen::Index>(l_));
        for (std::size_t t = 0; t < l_; ++t) b[static_cast<Eigen::Index>(t)] = alpha_[t] - alpha_[t + l_];
        return b;
    }

    [[nodiscard]] double rho() const {
        double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < 2 * l_; ++t) {
            const double yG = sign_[t] * G_[t];
            if (alpha_[t] >= C_) {
                if (sign_[t] < 0) ub = std::min(ub, yG);
                else lb = std::max(lb, yG);
            } else if (alpha_[t] <= 0.0) {
                if (sign_[t] > 0) ub = std::min(ub, yG);
                else lb = std::max(lb, yG);
            } else {
                ++n_free;
                sum_free += yG;
            }
        }
        return n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    }

private:
    double kernel(std::size_t a, std::size_t b) const {
        return K_(static_cast<Eigen::Index>(a % l_), static_cast<Eigen::Index>(b % l_));
    }

    void fill_row(std::size_t i, std::vector<double>& row) const {
        const auto ki = K_.col(static_cast<Eigen::Index>(i % l_));
        for (std::size_t t = 0; t < l_; ++t) {
            const double k = ki[static_cast<Eigen::Index>(t)];
            row[t] = sign_[i] * k;
            row[t + l_] = -sign_[i] * k;
        }
    }

    bool select(double tol, std::size_t& out_i, std::size_t& out_j, double& violation) {
        const std::size_t n = 2 * l_;
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        long gmax_idx = -1, gmin_idx = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (sign_[t] > 0) {
                if (alpha_[t] < C_ && -G_[t] >= gmax) {
                    gmax = -G_[t];
                    gmax_idx = static_cast<long>(t);
                }
            } else if (alpha_[t] > 0.0 && G_[t] >= gmax) {
                gmax = G_[t];
                gmax_idx = static_cast<long>(t);
            }
        }
        if (gmax_idx < 0) return true;
        const auto i = static_cast<std::size_t>(gmax_idx);
        fill_row(i, row_i_);
        for (std::size_t t = 0; t < n; ++t) {
            if (sign_[t] > 0) {
                if (alpha_[t] > 0.0) {
                    const double grad_diff = gmax + G_[t];
                    gmax2 = std::max(gmax2, G_[t]);
                    if (grad_diff > 0.0) {
                        double quad = 2.0 - 2.0 * sign_[i] * row_i_[t];
                        if (quad <= 0.0) quad = kTau;
                        const double obj = -(grad_diff * grad_diff) / quad;
                        if (obj <= obj_min) {
                            gmin_idx = static_cast<long>(t);
                            obj_min = obj;
                        }
                    }
                }
            } else if (alpha_[t] < C_) {
                const double grad_diff = gmax - G_[t];
                gmax2 = std::max(gmax2, -G_[t]);
                if (grad_diff > 0.0) {
                    double quad = 2.0 + 2.0 * sign_[i] * row_i_[t];
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= obj_min) {
                        gmin_idx = static_cast<long>(t);
                        obj_min = obj;
                    }
                }
            }
        }
        violation = gmax + gmax2;
        if (violation < tol || gmin_idx < 0) return true;
        out_i = i;
        out_j = static_cast<std::size_t>(gmin_idx);
        return false;
    }

    void update(std::size_t i, std::size_t j) {
        fill_row(j, row_j_);
        const double old_ai = alpha_[i], old_aj = alpha_[j];
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (sign_[i] != sign_[j]) {
            double quad = 2.0 + 2.0 * row_i_[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G_[i] - G_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C_) {
                    ai = C_;
                    aj = C_ - diff;
                }
            } else if (aj > C_) {
                aj = C_;
                ai = C_ + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * row_i_[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (G_[i] - G_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C_) {
                if (ai > C_) {
                    ai = C_;
                    aj = sum - C_;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > C_) {
                if (aj > C_) {
                    aj = C_;
                    ai = sum - C_;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }
        const double dai = ai - old_ai, daj = aj - old_aj;
        for (std::size_t t = 0; t < 2 * l_; ++t) G_[t] += row_i_[t] * dai + row_j_[t] * daj;
    }

    const Eigen::MatrixXd& K_;
    std::size_t l_;
    double C_;
    std::vector<double> alpha_, G_, row_i_, row_j_;
    std::vector<int> sign_;
};

}  // namespace

double svr_dual_objective(const RowMatrix& Z, std::span<const double> y, const Eigen::VectorXd& coef, double gamma,
                          double epsilon) {
    const Eigen::MatrixXd K = kernel_matrix(Z, Z, gamma);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    return 0.5 * coef.dot(K * coef) + epsilon * coef.cwiseAbs().sum() - yv.dot(coef);
}

SvrModel fit_svr(const RowMatrix& X, std::span<const double> y, const SvrParams& params, std::uint64_t seed) {
    params.validate();
    const auto n_all = static_cast<std::size_t>(X.rows());
    if (n_all != y.size()) throw ArgumentError("fit_svr: X and y row counts differ");
    if (n_all < 2) throw ArgumentError("fit_svr: need at least two rows");
    if (!X.allFinite()) throw ArgumentError("fit_svr: design matrix has non-finite entries");

    std::vector<std::size_t> rows;
    if (params.max_rows > 0 && n_all > params.max_rows) {
        for (std::size_t k = 0; k < params.max_rows; ++k) rows.push_back(k * n_all / params.max_rows);
    } else {
        rows.resize(n_all);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    Rng rng(mix_seed(seed, 0x5u));
    for (std::size_t k = rows.size(); k > 1; --k) {
        std::swap(rows[k - 1], rows[static_cast<std::size_t>(rng.index(k))]);
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = X.cols();
    SvrModel model;
    model.C = params.C;
    model.epsilon = params.epsilon;
    model.gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(m, 1));
    model.mean = X.colwise().mean().transpose();
    model.scale.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double var = (X.col(k).array() - model.mean[k]).square().sum() / static_cast<double>(X.rows());
        model.scale[k] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    model.support.resize(n, m);
    std::vector<double> ys(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
        model.support.row(r) = (X.row(src) - model.mean.transpose()).cwiseQuotient(model.scale.transpose());
        ys[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(src)];
        if (!std::isfinite(ys[static_cast<std::size_t>(r)])) throw ArgumentError("fit_svr: target has non-finite entries");
    }

    Eigen::MatrixXd K = kernel_matrix(model.support, model.support, model.gamma);
    K.diagonal().setOnes();
    Smo smo(K, ys, params.C, params.epsilon);
    const std::size_t max_iter =
        params.max_iterations > 0 ? params.max_iterations : std::max<std::size_t>(10'000'000, 100 * rows.size());
    model.iterations = smo.solve(params.tol, max_iter);
    model.coef = smo.coefficients();
    model.bias = -smo.rho();
    const Eigen::Map<const Eigen::VectorXd> yv(ys.data(), n);
    model.dual_objective = 0.5 * model.coef.dot(K * model.coef) + params.epsilon * model.coef.cwiseAbs().sum() -
                           yv.dot(model.coef);
    return model;
}

Eigen::VectorXd predict_svr(const SvrModel& model, const RowMatrix& X) {
    if (X.cols() != model.support.cols()) {
        throw ArgumentError("predict_svr: matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                            std::to_string(model.support.cols()));
    }
    RowMatrix Z = (X.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
    const Eigen::MatrixXd K = kernel_matrix(Z, model.support, model.gamma);
    return (K * model.coef).array() + model.bias;
}

}  // namespace epf

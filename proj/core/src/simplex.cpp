#include "epf/simplex.hpp"

#include "epf/common.hpp"

#include <algorithm>
#include <cmath>

namespace epf::lp {

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

class Solver {
public:
    Solver(const Problem& p, const Options& o) : p_(p), opt_(o), m_(p.A.rows()), n_(p.A.cols()) {}

    Result run(const std::vector<bool>& start_at_upper) {
        if (p_.b.size() != m_ || p_.c.size() != n_ || p_.lower.size() != n_ || p_.upper.size() != n_) {
            throw ArgumentError("lp::solve: inconsistent problem dimensions");
        }
        for (Eigen::Index j = 0; j < n_; ++j) {
            if (p_.lower[j] > p_.upper[j]) {
                Result r;
                r.status = Status::infeasible;
                return r;
            }
        }
        init(start_at_upper);

        // Phase I: drive the artificials to zero.
        cost_.setZero(n_ + m_);
        cost_.tail(m_).setOnes();
        Status s = iterate();
        double infeas = x_.tail(m_).sum();
        const double scale = std::max(1.0, p_.b.size() ? p_.b.cwiseAbs().maxCoeff() : 0.0);
        Result result;
        if (s == Status::iteration_limit) {
            result.status = s;
            result.iterations = iterations_;
            return result;
        }
        if (infeas > opt_.feasibility_tol * scale * std::max<double>(1.0, static_cast<double>(m_))) {
            result.status = Status::infeasible;
            result.iterations = iterations_;
            return result;
        }

        for (Eigen::Index i = 0; i < m_; ++i) {
            lo_[n_ + i] = 0.0;
            up_[n_ + i] = 0.0;
            if (pos_[n_ + i] < 0) x_[n_ + i] = 0.0;
        }
        result.redundant_rows = drive_out_artificials();

        // Phase II.
        cost_.head(n_) = p_.c;
        cost_.tail(m_).setZero();
        s = iterate();
        result.status = s;
        result.iterations = iterations_;
        result.x = x_.head(n_);
        result.objective = p_.c.dot(result.x);
        result.duals = Binv_.transpose() * basic_costs();
        return result;
    }

private:
    Eigen::VectorXd column(Eigen::Index j) const {
        if (j < n_) return p_.A.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e[j - n_] = art_sign_[j - n_];
        return e;
    }

    void init(const std::vector<bool>& start_at_upper) {
        const Eigen::Index N = n_ + m_;
        lo_.resize(N);
        up_.resize(N);
        x_.resize(N);
        pos_.assign(static_cast<std::size_t>(N), -1);
        for (Eigen::Index j = 0; j < n_; ++j) {
            lo_[j] = p_.lower[j];
            up_[j] = p_.upper[j];
            const bool lo_fin = std::isfinite(lo_[j]);
            const bool up_fin = std::isfinite(up_[j]);
            const bool hint = !start_at_upper.empty() && start_at_upper[static_cast<std::size_t>(j)];
            if (lo_fin && up_fin) x_[j] = hint ? up_[j] : lo_[j];
            else if (lo_fin) x_[j] = lo_[j];
            else if (up_fin) x_[j] = up_[j];
            else x_[j] = 0.0;
        }
        const Eigen::VectorXd r = p_.b - p_.A * x_.head(n_);
        art_sign_.resize(m_);
        basis_.resize(static_cast<std::size_t>(m_));
        Binv_ = Eigen::MatrixXd::Zero(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
            lo_[n_ + i] = 0.0;
            up_[n_ + i] = kInf;
            x_[n_ + i] = std::abs(r[i]);
            basis_[static_cast<std::size_t>(i)] = n_ + i;
            pos_[static_cast<std::size_t>(n_ + i)] = static_cast<int>(i);
            Binv_(i, i) = art_sign_[i];
        }
        since_refactor_ = 0;
    }

    Eigen::VectorXd basic_costs() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost_[basis_[static_cast<std::size_t>(i)]];
        return cb;
    }

    void refactor() {
        Eigen::MatrixXd B(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = column(basis_[static_cast<std::size_t>(i)]);
        Binv_ = B.partialPivLu().inverse();
        if (!Binv_.allFinite()) throw SolverError("lp::solve: singular basis");
        // Recompute basic values from the nonbasic ones.
        Eigen::VectorXd xs = x_.head(n_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            if (j < n_) xs[j] = 0.0;
        }
        Eigen::VectorXd rhs = p_.b - p_.A * xs;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (pos_[static_cast<std::size_t>(n_ + i)] < 0) rhs[i] -= art_sign_[i] * x_[n_ + i];
        }
        const Eigen::VectorXd xb = Binv_ * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[static_cast<std::size_t>(i)]] = xb[i];
        since_refactor_ = 0;
    }

    void reduced_costs() {
        const Eigen::VectorXd pi = Binv_.transpose() * basic_costs();
        d_.resize(n_ + m_);
        d_.head(n_) = cost_.head(n_) - p_.A.transpose() * pi;
        for (Eigen::Index i = 0; i < m_; ++i) d_[n_ + i] = cost_[n_ + i] - art_sign_[i] * pi[i];
    }

    // Entering column and direction, or -1.
    Eigen::Index price(bool bland, int& dir) const {
        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index j = 0; j < n_ + m_; ++j) {
            if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
            if (lo_[j] == up_[j]) continue;
            const double dj = d_[j];
            int dj_dir = 0;
            if (dj < -opt_.optimality_tol && x_[j] < up_[j]) dj_dir = 1;
            else if (dj > opt_.optimality_tol && x_[j] > lo_[j]) dj_dir = -1;
            if (dj_dir == 0) continue;
            if (bland) {
                dir = dj_dir;
                return j;
            }
            if (std::abs(dj) > best_score) {
                best_score = std::abs(dj);
                best = j;
                dir = dj_dir;
            }
        }
        return best;
    }

    void pivot(Eigen::Index r, Eigen::Index entering, const Eigen::VectorXd& alpha) {
        const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
        pos_[static_cast<std::size_t>(leaving)] = -1;
        basis_[static_cast<std::size_t>(r)] = entering;
        pos_[static_cast<std::size_t>(entering)] = static_cast<int>(r);
        Binv_.row(r) /= alpha[r];
        const Eigen::RowVectorXd pivot_row = Binv_.row(r);
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i != r && alpha[i] != 0.0) Binv_.row(i) -= alpha[i] * pivot_row;
        }
        ++since_refactor_;
    }

    Status iterate() {
        std::size_t degenerate_run = 0;
        bool stale = true;
        bool verified = false;
        while (true) {
            if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
            if (since_refactor_ >= opt_.refactor_interval) {
                refactor();
                stale = true;
            }
            if (stale) {
                reduced_costs();
                stale = false;
            }
            int dir = 0;
            const Eigen::Index q = price(degenerate_run >= opt_.degenerate_limit, dir);
            if (q < 0) {
                if (verified) return Status::optimal;
                // Confirm optimality on a fresh factorization before stopping.
                refactor();
                reduced_costs();
                verified = true;
                continue;
            }
            verified = false;
            ++iterations_;

            const Eigen::VectorXd alpha = Binv_ * column(q);
            double theta = up_[q] - lo_[q];
            Eigen::Index r = -1;
            const bool bland = degenerate_run >= opt_.degenerate_limit;
            // Two-pass ratio test: bound the step with the bounds relaxed by the feasibility
            // tolerance, then take the largest pivot among rows that block within that step.
            const double tol = std::max(opt_.pivot_tol, opt_.relative_pivot_tol * alpha.cwiseAbs().maxCoeff());
            const auto ratio = [&](Eigen::Index i, double slack) {
                const double a = dir * alpha[i];
                const Eigen::Index bi = basis_[static_cast<std::size_t>(i)];
                if (a > tol && std::isfinite(lo_[bi])) return (x_[bi] - lo_[bi] + slack) / a;
                if (a < -tol && std::isfinite(up_[bi])) return (up_[bi] - x_[bi] + slack) / -a;
                return kInf;
            };
            double relaxed = kInf;
            for (Eigen::Index i = 0; i < m_; ++i) relaxed = std::min(relaxed, ratio(i, opt_.feasibility_tol));
            if (relaxed < theta) {
                double best_t = kInf;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double t = ratio(i, 0.0);
                    if (t > relaxed) continue;
                    bool take = r < 0;
                    if (!take && bland) {
                        take = basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)];
                    } else if (!take) {
                        take = std::abs(alpha[i]) > std::abs(alpha[r]);
                    }
                    if (take) {
                        r = i;
                        best_t = t;
                    }
                }
                theta = std::max(best_t, 0.0);
            }
            if (!std::isfinite(theta)) return Status::unbounded;

            x_[q] += dir * theta;
            for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[static_cast<std::size_t>(i)]] -= dir * theta * alpha[i];
            if (r < 0) {
                x_[q] = dir > 0 ? up_[q] : lo_[q];
            } else {
                const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
                x_[leaving] = dir * alpha[r] > 0 ? lo_[leaving] : up_[leaving];
                pivot(r, q, alpha);
                stale = true;
            }
            degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
        }
    }

    bool drive_out_artificials() {
        bool redundant = false;
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (basis_[static_cast<std::size_t>(r)] < n_) continue;
            const Eigen::RowVectorXd row = Binv_.row(r) * p_.A;
            Eigen::Index best = -1;
            double best_abs = 1e-7;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
                if (std::abs(row[j]) > best_abs) {
                    best_abs = std::abs(row[j]);
                    best = j;
                }
            }
            if (best < 0) {
                redundant = true;
                continue;
            }
            const Eigen::VectorXd alpha = Binv_ * column(best);
            const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
            pivot(r, best, alpha);
            x_[leaving] = 0.0;
        }
        refactor();
        return redundant;
    }

    const Problem& p_;
    const Options& opt_;
    Eigen::Index m_;
    Eigen::Index n_;
    Eigen::VectorXd lo_, up_, x_, cost_, d_, art_sign_;
    std::vector<Eigen::Index> basis_;
    std::vector<int> pos_;
    Eigen::MatrixXd Binv_;
    std::size_t since_refactor_ = 0;
    std::size_t iterations_ = 0;
};

}  // namespace

Result solve(const Problem& problem, const Options& options, const std::vector<bool>& start_at_upper) {
    if (!start_at_upper.empty() && start_at_upper.size() != static_cast<std::size_t>(problem.A.cols())) {
        throw ArgumentError("lp::solve: start_at_upper has the wrong length");
    }
    Solver solver(problem, options);
    return solver.run(start_at_upper);
}

}  // namespace epf::lp

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace nnreach {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;  ///< meaningful only when optimal
    VectorXd x;              ///< argmax when optimal
};

/// Backend contract: maximize c'x subject to A x <= b with x free.
/// Implementations are not thread-safe; use one instance per thread.
class LpSolver {
public:
    virtual ~LpSolver() = default;

    LpResult maximize(const MatrixXd& A, const VectorXd& b, const VectorXd& c) {
        ++solves_;
        return solve(A, b, c);
    }

    std::size_t solve_count() const noexcept { return solves_; }
    void reset_count() noexcept { solves_ = 0; }

protected:
    virtual LpResult solve(const MatrixXd& A, const VectorXd& b, const VectorXd& c) = 0;

private:
    std::size_t solves_ = 0;
};

/// Dense two-phase tableau simplex. Free variables are split as x = x+ - x-;
/// Bland-style index tie-breaking prevents cycling. Adequate for the small,
/// dense LPs that arise from cell H-representations.
class DenseSimplex final : public LpSolver {
public:
    explicit DenseSimplex(double eps = 1e-9) : eps_(eps) {}

protected:
    LpResult solve(const MatrixXd& A, const VectorXd& b, const VectorXd& c) override {
        const int m = static_cast<int>(A.rows());
        const int d = static_cast<int>(A.cols());
        const int n = 2 * d;
        LpResult result;
        result.x = VectorXd::Zero(d);

        if (m == 0) {
            result.status = c.isZero(0.0) ? LpStatus::optimal : LpStatus::unbounded;
            return result;
        }

        m_ = m;
        n_ = n;
        basis_.assign(static_cast<std::size_t>(m), 0);
        nonbasis_.assign(static_cast<std::size_t>(n) + 1, 0);
        cols_ = n + 2;
        table_.assign(static_cast<std::size_t>(m + 2) * static_cast<std::size_t>(cols_), 0.0);

        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < d; ++j) {
                at(i, j) = A(i, j);
                at(i, j + d) = -A(i, j);
            }
            basis_[static_cast<std::size_t>(i)] = n + i;
            at(i, n) = -1.0;
            at(i, n + 1) = b[i];
        }
        for (int j = 0; j < d; ++j) {
            at(m, j) = -c[j];
            at(m, j + d) = c[j];
        }
        for (int j = 0; j < n; ++j) nonbasis_[static_cast<std::size_t>(j)] = j;
        nonbasis_[static_cast<std::size_t>(n)] = -1;
        at(m + 1, n) = 1.0;

        int r = 0;
        for (int i = 1; i < m; ++i)
            if (at(i, n + 1) < at(r, n + 1)) r = i;
        if (at(r, n + 1) < -eps_) {
            pivot(r, n);
            if (!run(2) || at(m + 1, n + 1) < -eps_) {
                result.status = LpStatus::infeasible;
                return result;
            }
            for (int i = 0; i < m; ++i) {
                if (basis_[static_cast<std::size_t>(i)] != -1) continue;
                int s = 0;
                for (int j = 1; j <= n; ++j) less_pick(s, j, i);
                pivot(i, s);
            }
        }
        const bool bounded = run(1);
        VectorXd split = VectorXd::Zero(n);
        for (int i = 0; i < m; ++i) {
            int v = basis_[static_cast<std::size_t>(i)];
            if (v >= 0 && v < n) split[v] = at(i, n + 1);
        }
        result.x = split.head(d) - split.tail(d);
        if (!bounded) {
            result.status = LpStatus::unbounded;
            return result;
        }
        result.status = LpStatus::optimal;
        result.objective = c.dot(result.x);
        return result;
    }

private:
    double& at(int i, int j) { return table_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }

    // Column choice for entering variable: smallest reduced cost, ties by index.
    void less_pick(int& s, int j, int row) {
        const auto nj = static_cast<std::size_t>(j), ns = static_cast<std::size_t>(s);
        if (s == -1 || std::make_pair(at(row, j), nonbasis_[nj]) < std::make_pair(at(row, s), nonbasis_[ns])) s = j;
    }

    void pivot(int r, int s) {
        const double inv = 1.0 / at(r, s);
        double* prow = &at(r, 0);
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r) continue;
            double* row = &at(i, 0);
            if (std::abs(row[s]) <= eps_) continue;
            const double f = row[s] * inv;
            for (int j = 0; j < n_ + 2; ++j) row[j] -= prow[j] * f;
            row[s] = prow[s] * f;
        }
        for (int j = 0; j < n_ + 2; ++j)
            if (j != s) prow[j] *= inv;
        for (int i = 0; i < m_ + 2; ++i)
            if (i != r) at(i, s) *= -inv;
        prow[s] = inv;
        std::swap(basis_[static_cast<std::size_t>(r)], nonbasis_[static_cast<std::size_t>(s)]);
    }

    bool run(int phase) {
        const int obj = m_ + phase - 1;
        for (int iter = 0;; ++iter) {
            int s = -1;
            for (int j = 0; j <= n_; ++j)
                if (nonbasis_[static_cast<std::size_t>(j)] != -phase) less_pick(s, j, obj);
            if (at(obj, s) >= -eps_) return true;
            int r = -1;
            for (int i = 0; i < m_; ++i) {
                if (at(i, s) <= eps_) continue;
                if (r == -1) {
                    r = i;
                    continue;
                }
                const double lhs = at(i, n_ + 1) / at(i, s), rhs = at(r, n_ + 1) / at(r, s);
                if (lhs < rhs || (lhs == rhs && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) r = i;
            }
            if (r == -1) return false;
            pivot(r, s);
        }
    }

    double eps_;
    int m_ = 0, n_ = 0, cols_ = 0;
    std::vector<int> basis_, nonbasis_;
    std::vector<double> table_;
};

}  // namespace nnreach

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace nnreach;
using namespace nnreach::testing;

namespace {

LpResult solve(const MatrixXd& A, const VectorXd& b, const VectorXd& c) {
    DenseSimplex lp;
    return lp.maximize(A, b, c);
}

}  // namespace

TEST(DenseSimplex, SquareCorner) {
    MatrixXd A(4, 2);
    A << 1, 0, 0, 1, -1, 0, 0, -1;
    VectorXd b(4);
    b << 1, 1, 0, 0;
    auto r = solve(A, b, Eigen::Vector2d(1, 1));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 2.0, 1e-12);
    EXPECT_NEAR(r.x[0], 1.0, 1e-12);
    EXPECT_NEAR(r.x[1], 1.0, 1e-12);
}

TEST(DenseSimplex, NegativeFreeVariables) {
    MatrixXd A(2, 1);
    A << 1, -1;
    VectorXd b(2);
    b << -3, 5;
    auto r = solve(A, b, VectorXd::Constant(1, -1.0));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.x[0], -5.0, 1e-12);
}

TEST(DenseSimplex, DetectsInfeasible) {
    MatrixXd A(2, 1);
    A << 1, -1;
    VectorXd b(2);
    b << 0, -1;
    EXPECT_EQ(solve(A, b, VectorXd::Ones(1)).status, LpStatus::infeasible);
}

TEST(DenseSimplex, DetectsUnbounded) {
    MatrixXd A(1, 2);
    A << 1, 0;
    EXPECT_EQ(solve(A, VectorXd::Ones(1), Eigen::Vector2d(0, 1)).status, LpStatus::unbounded);
    EXPECT_EQ(solve(MatrixXd(0, 2), VectorXd(0), Eigen::Vector2d(1, 0)).status, LpStatus::unbounded);
    EXPECT_EQ(solve(MatrixXd(0, 2), VectorXd(0), Eigen::Vector2d(0, 0)).status, LpStatus::optimal);
}

TEST(DenseSimplex, DegenerateVertexDoesNotCycle) {
    // many constraints through the same optimal vertex
    MatrixXd A(8, 2);
    VectorXd b(8);
    for (int i = 0; i < 8; ++i) {
        const double t = 0.1 + 0.15 * i;
        A.row(i) << std::cos(t), std::sin(t);
        b[i] = 0.0;
    }
    auto r = solve(A, b, Eigen::Vector2d(std::cos(0.6), std::sin(0.6)));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

TEST(DenseSimplex, CountsSolves) {
    DenseSimplex lp;
    MatrixXd A(1, 1);
    A << 1;
    for (int i = 0; i < 3; ++i) lp.maximize(A, VectorXd::Ones(1), VectorXd::Ones(1));
    EXPECT_EQ(lp.solve_count(), 3u);
    lp.reset_count();
    EXPECT_EQ(lp.solve_count(), 0u);
}

// Optimum of a random bounded LP equals the best vertex found by brute-force
// enumeration of all d-subsets of tight constraints.
TEST(DenseSimplex, MatchesVertexEnumeration) {
    Rng rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + trial % 2;
        const int m = 6 + trial % 5;
        HPolyhedron p = random_hrep_around(rng, d, m, VectorXd::Zero(d));
        VectorXd lo = VectorXd::Constant(d, -3), hi = VectorXd::Constant(d, 3);
        HPolyhedron box = HPolyhedron::box(lo, hi);
        for (const auto& c : box.constraints()) p.add(c);
        MatrixXd A = p.A();
        VectorXd b = p.b();
        VectorXd c(d);
        for (int k = 0; k < d; ++k) c[k] = g(rng);

        double best = -std::numeric_limits<double>::infinity();
        const int n = static_cast<int>(A.rows());
        std::vector<int> idx(static_cast<std::size_t>(d));
        std::function<void(int, int)> rec = [&](int start, int depth) {
            if (depth == d) {
                MatrixXd S(d, d);
                VectorXd s(d);
                for (int k = 0; k < d; ++k) {
                    S.row(k) = A.row(idx[static_cast<std::size_t>(k)]);
                    s[k] = b[idx[static_cast<std::size_t>(k)]];
                }
                Eigen::FullPivLU<MatrixXd> lu(S);
                if (!lu.isInvertible()) return;
                VectorXd v = lu.solve(s);
                if ((A * v - b).maxCoeff() <= 1e-9) best = std::max(best, c.dot(v));
                return;
            }
            for (int i = start; i < n; ++i) {
                idx[static_cast<std::size_t>(depth)] = i;
                rec(i + 1, depth + 1);
            }
        };
        rec(0, 0);
        auto r = solve(A, b, c);
        ASSERT_EQ(r.status, LpStatus::optimal);
        EXPECT_NEAR(r.objective, best, 1e-8) << "trial " << trial;
        EXPECT_LE((A * r.x - b).maxCoeff(), 1e-9);
    }
}

// SPDX-License-Identifier: MIT
#include "attnopt/lp.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace attnopt;

namespace {

// Packing-style problem shaped like the rounding polytope: non-negative rows.
LpProblem random_packing(std::mt19937_64& gen, int m, int rows, bool with_ge) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    LpProblem p(m);
    for (int r = 0; r < rows; ++r) {
        std::vector<double> c(m);
        double s = 0.0;
        for (auto& v : c) {
            v = U(gen);
            s += v;
        }
        p.add_row(c, RowSense::Le, 0.4 * s);
    }
    p.add_row(std::vector<double>(m, 1.0), RowSense::Le, 0.5 * m);
    if (with_ge) {
        std::vector<double> c(m);
        double s = 0.0;
        for (auto& v : c) {
            v = U(gen);
            s += v;
        }
        p.add_row(c, RowSense::Ge, 0.1 * s);
    }
    return p;
}

// Rank of the active constraint set at x (rows within tol, plus bound-tight coordinates).
int active_rank(const LpProblem& p, const std::vector<double>& x) {
    std::vector<Eigen::VectorXd> act;
    for (const auto& r : p.rows) {
        double lhs = 0.0;
        for (int i = 0; i < p.num_vars; ++i) lhs += r.coeffs[i] * x[i];
        if (std::abs(lhs - r.rhs) <= 1e-7) act.push_back(Eigen::Map<const Eigen::VectorXd>(r.coeffs.data(), p.num_vars));
    }
    for (int i = 0; i < p.num_vars; ++i)
        if (std::abs(x[i] - p.lower[i]) <= 1e-9 || std::abs(x[i] - p.upper[i]) <= 1e-9) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(p.num_vars);
            e(i) = 1.0;
            act.push_back(e);
        }
    Eigen::MatrixXd M(act.size(), p.num_vars);
    for (std::size_t a = 0; a < act.size(); ++a) M.row(static_cast<Eigen::Index>(a)) = act[a].transpose();
    return static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(M).rank());
}

}  // namespace

TEST(Lp, BoxOnlyGivesCorner) {
    LpProblem p(5);
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_TRUE(sol.ok());
    EXPECT_EQ(sol.fractional, 0);
}

TEST(Lp, ZeroSumForcesZero) {
    LpProblem p(4);
    p.add_row(std::vector<double>(4, 1.0), RowSense::Le, 0.0);
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_TRUE(sol.ok());
    for (double v : sol.x) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Lp, InfeasibleDetected) {
    LpProblem p(3);
    p.add_row({1.0, 1.0, 1.0}, RowSense::Ge, 3.5);
    EXPECT_EQ(lp_solve(p).status, LpStatus::Infeasible);
    LpProblem q(2);
    q.fix(0, 1.0);
    q.add_row({1.0, 0.0}, RowSense::Le, 0.5);
    EXPECT_EQ(lp_solve(q).status, LpStatus::Infeasible);
}

TEST(Lp, FixedVariablesRespected) {
    LpProblem p(3);
    p.fix(1, 1.0);
    p.fix(2, 0.0);
    p.add_row({1.0, 1.0, 1.0}, RowSense::Le, 1.5);
    p.objective = {1.0, 0.0, 5.0};
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_TRUE(sol.ok());
    EXPECT_NEAR(sol.x[0], 0.5, 1e-12);
    EXPECT_EQ(sol.x[1], 1.0);
    EXPECT_EQ(sol.x[2], 0.0);
}

TEST(Lp, MaximizesSmallKnapsack) {
    LpProblem p(3);
    p.add_row({2.0, 3.0, 4.0}, RowSense::Le, 5.0);
    p.objective = {3.0, 4.0, 5.0};
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    // Items 0 and 1 fill the capacity exactly.
    EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 1.0, 1e-12);
    EXPECT_NEAR(sol.x[2], 0.0, 1e-12);
}

TEST(Lp, EqualityRows) {
    LpProblem p(3);
    p.add_row({1.0, 1.0, 1.0}, RowSense::Eq, 1.25);
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_TRUE(sol.ok());
    EXPECT_NEAR(sol.x[0] + sol.x[1] + sol.x[2], 1.25, 1e-9);
    EXPECT_LE(sol.fractional, 1);
}

TEST(Lp, RandomVerticesHaveFewFractionalCoordinates) {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 200; ++t) {
        const int m = 6 + static_cast<int>(gen() % 20);
        const int rows = 1 + static_cast<int>(gen() % 5);
        auto p = random_packing(gen, m, rows, t % 2 == 0);
        if (t % 3 == 0) p.objective.assign(m, 1.0);
        const auto sol = lp_solve(p, LpMode::Vertex);
        if (!sol.ok()) continue;
        EXPECT_LE(max_violation(p, sol.x), 1e-8);
        EXPECT_LE(sol.fractional, static_cast<int>(p.rows.size()));
        EXPECT_EQ(sol.fractional, count_fractional(p, sol.x));
        EXPECT_EQ(active_rank(p, sol.x), m) << "not a vertex, trial " << t;
    }
}

TEST(Lp, DegenerateProblemTerminates) {
    // Many identical tight rows through the origin.
    LpProblem p(6);
    for (int r = 0; r < 12; ++r) p.add_row({1, -1, 1, -1, 1, -1}, RowSense::Le, 0.0);
    for (int r = 0; r < 6; ++r) p.add_row({1, 1, 0, 0, 0, 0}, RowSense::Le, 1.0);
    p.objective = {1, 1, 1, 1, 1, 1};
    const auto sol = lp_solve(p, LpMode::Vertex);
    ASSERT_TRUE(sol.ok());
    EXPECT_LE(max_violation(p, sol.x), 1e-8);
    double obj = 0.0;
    for (double v : sol.x) obj += v;
    EXPECT_NEAR(obj, 5.0, 1e-9);
}

TEST(Lp, StatusNames) {
    EXPECT_EQ(to_string(LpStatus::Infeasible), "infeasible");
    EXPECT_EQ(to_string(LpStatus::Optimal), "optimal");
}

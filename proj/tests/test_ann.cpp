// SPDX-License-Identifier: MIT
#include "attnopt/ann.hpp"
#include "attnopt/baselines.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace attnopt;

namespace {

Mat gaussian(std::mt19937_64& gen, int n, int d) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat X(n, d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) X(i, c) = N(gen);
    return X;
}

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// Exact sorted inner products, descending.
std::vector<double> exact_values(const Mat& X, const Vec& u) {
    std::vector<double> v(X.rows());
    for (int i = 0; i < X.rows(); ++i) v[i] = X.row(i).dot(u);
    std::sort(v.rbegin(), v.rend());
    return v;
}

void expect_contract(const Mat& X, const Vec& u, const std::vector<int>& got, double eps) {
    const auto exact = exact_values(X, u);
    std::vector<double> vals;
    for (int i : got) vals.push_back(X.row(i).dot(u));
    std::sort(vals.rbegin(), vals.rend());
    for (std::size_t j = 0; j < got.size(); ++j) ASSERT_GE(vals[j], exact[j] - eps - 1e-12) << "rank " << j;
}

}  // namespace

TEST(SphereLift, CollinearMaximalPoint) {
    Mat X(2, 2);
    X << 3.0, 0.0, 0.0, 1.0;
    Vec u(2);
    u << 1.0, 0.0;
    const auto lift = lift_to_sphere(X, u);
    EXPECT_NEAR((lift.points.row(0).transpose() - lift.query).norm(), 0.0, 1e-15);
    EXPECT_NEAR(lift.inner_product(0), 3.0, 1e-12);
}

TEST(SphereLift, UnitNormsAndIdentity) {
    std::mt19937_64 gen(1);
    const Mat X = gaussian(gen, 100, 5);
    const Vec u = gaussian(gen, 1, 5).row(0).transpose() * 3.0;
    const auto lift = lift_to_sphere(X, u);
    EXPECT_NEAR(lift.query.norm(), 1.0, 1e-12);
    for (int i = 0; i < 100; ++i) {
        EXPECT_NEAR(lift.points.row(i).norm(), 1.0, 1e-12);
        const double dist2 = (lift.query - lift.points.row(i).transpose()).squaredNorm();
        const double recovered = lift.v_max * u.norm() / 2.0 * (2.0 - dist2);
        EXPECT_NEAR(recovered, X.row(i).dot(u), 1e-9);
        EXPECT_NEAR(lift.inner_product(i), X.row(i).dot(u), 1e-9);
    }
}

TEST(SphereLift, DegenerateInputsRejected) {
    const Mat X = Mat::Ones(3, 2);
    EXPECT_THROW(lift_to_sphere(X, Vec::Zero(2)), ValidationError);
    EXPECT_THROW(lift_to_sphere(Mat::Zero(3, 2), Vec::Ones(2)), ValidationError);
}

TEST(AnnIndex, ExactBackendIsTrueTopK) {
    std::mt19937_64 gen(2);
    const Mat X = gaussian(gen, 200, 4);
    const AnnIndex idx(X, iota_ids(200), AnnBackend::Exact);
    for (int q = 0; q < 20; ++q) {
        const Vec u = gaussian(gen, 1, 4).row(0).transpose();
        auto got = k_ann_query(idx, u, 7, 0.5);
        auto want = exact_top_k(X, iota_ids(200), u, 7);
        EXPECT_EQ(got, want);
        std::vector<std::pair<double, int>> s;
        for (int i = 0; i < 200; ++i) s.push_back({-X.row(i).dot(u), i});
        std::sort(s.begin(), s.end());
        for (int j = 0; j < 7; ++j) EXPECT_EQ(want[j], s[j].second);
    }
}

TEST(AnnIndex, IdenticalPointsTieById) {
    const Mat X = Mat::Ones(6, 3);
    const std::vector<int> ids = {10, 4, 7, 2, 9, 5};
    const AnnIndex exact(X, ids, AnnBackend::Exact);
    EXPECT_EQ(exact.query(Vec::Ones(3), 3, 0.0), (std::vector<int>{2, 4, 5}));
    const AnnIndex tree(X, ids, AnnBackend::LiftedTree);
    auto got = tree.query(Vec::Ones(3), 3, 0.0);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(std::unique(got.begin(), got.end()), got.end());
    EXPECT_EQ(got.size(), 3u);
}

TEST(AnnIndex, LiftedTreeContractOnGaussianPoints) {
    std::mt19937_64 gen(3);
    const Mat X = gaussian(gen, 1000, 6);
    const AnnIndex idx(X, iota_ids(1000), AnnBackend::LiftedTree);
    for (int q = 0; q < 50; ++q) {
        const Vec u = gaussian(gen, 1, 6).row(0).transpose();
        const auto got = idx.query(u, 10, 0.1);
        ASSERT_EQ(got.size(), 10u);
        expect_contract(X, u, got, 0.1);
    }
}

TEST(AnnIndex, RejectsBadArguments) {
    std::mt19937_64 gen(4);
    const Mat X = gaussian(gen, 5, 2);
    const AnnIndex idx(X, iota_ids(5), AnnBackend::LiftedTree);
    EXPECT_THROW(idx.query(Vec::Ones(2), 6, 0.1), ValidationError);
    EXPECT_THROW(idx.query(Vec::Ones(2), 2, -1.0), ValidationError);
    EXPECT_THROW(AnnIndex(X, std::vector<int>{0, 0, 1, 2, 3}, AnnBackend::Exact), ValidationError);
}

TEST(PureEmbedding, SingleRewardExactIsSortedTopK) {
    const auto inst = oracle::random_instance(5, 20, 4, 3, 1.0, false);
    const auto sel = pure_embedding_solve(inst, 0.0, AnnBackend::Exact);
    EXPECT_EQ(sel.indices, oracle::sorted_top(inst, 4));
}

TEST(PureEmbedding, NonPositiveRewardsDropped) {
    auto inst = oracle::random_instance(6, 10, 3, 3, 1.0, false);
    inst.rewards = {RewardFunction::relu(0.0)};
    const auto sel = pure_embedding_solve(inst, 0.1);
    EXPECT_TRUE(sel.indices.empty());
    EXPECT_EQ(sel.objective, 0.0);
}

TEST(PureEmbedding, ExactEqualsTopKRewardSum) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = oracle::random_instance(seed, 12, 3, 3);
        const auto sel = pure_embedding_solve(inst, 0.0, AnnBackend::Exact);
        std::vector<double> r;
        for (int i = 0; i < inst.n; ++i) r.push_back(oracle::reward(inst.reward(i), inst.V.row(i).dot(inst.u)));
        std::vector<double> sorted = r;
        std::sort(sorted.rbegin(), sorted.rend());
        double want = 0.0;
        for (int j = 0; j < inst.k; ++j)
            if (sorted[j] > 0.0) want += sorted[j];
        EXPECT_NEAR(sel.objective, want, 1e-12);
    }
}

TEST(PureEmbedding, LiftedTreeWithinAdditiveBound) {
    const double eps = 0.05;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto inst = oracle::random_instance(seed * 7919, 50, 5, 4, 1.0, false);
        const auto sel = pure_embedding_solve(inst, eps, AnnBackend::LiftedTree);
        std::vector<double> r;
        for (int i = 0; i < inst.n; ++i) r.push_back(oracle::reward(inst.reward(i), inst.V.row(i).dot(inst.u)));
        std::sort(r.rbegin(), r.rend());
        double opt = 0.0;
        for (int j = 0; j < inst.k; ++j) opt += std::max(r[j], 0.0);
        ASSERT_GE(sel.objective, opt - inst.k * inst.lipschitz() * eps - 1e-12) << "seed " << seed;
    }
}

// SPDX-License-Identifier: MIT
#include "attnopt/attention.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace attnopt;

TEST(Softmax, UniformOnEqualLogits) {
    const Mat W = softmax_rows(Mat::Zero(2, 2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(W(i, j), 0.5);
}

TEST(Softmax, AnalyticRatio) {
    Mat A(1, 2);
    A << 0.0, std::log(3.0);
    const Mat W = softmax_rows(A);
    EXPECT_NEAR(W(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(W(0, 1), 0.75, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
    Mat A(1, 2);
    A << 700.0, 700.0;
    const Mat W = softmax_rows(A);
    EXPECT_DOUBLE_EQ(W(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(W(0, 1), 0.5);
    A << 1e6, 0.0;
    EXPECT_DOUBLE_EQ(softmax_rows(A)(0, 0), 1.0);
}

TEST(Softmax, RowsAreStochastic) {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> N(0.0, 5.0);
    Mat A(20, 13);
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) A(i, j) = N(gen);
    const Mat W = softmax_rows(A);
    for (int i = 0; i < W.rows(); ++i) {
        EXPECT_NEAR(W.row(i).sum(), 1.0, 1e-12);
        EXPECT_GT(W.row(i).minCoeff(), 0.0);
        EXPECT_LT(W.row(i).maxCoeff(), 1.0);
    }
}

TEST(AttentionMatrix, EqualsSoftmaxOfLogits) {
    const auto inst = oracle::random_instance(4, 9, 3, 3);
    const Mat W = attention_matrix(inst);
    for (int i = 0; i < inst.n; ++i) {
        double den = 0.0;
        for (int j = 0; j < inst.n; ++j) den += std::exp(inst.Q.row(i).dot(inst.K.row(j)));
        for (int j = 0; j < inst.n; ++j)
            EXPECT_NEAR(W(i, j), std::exp(inst.Q.row(i).dot(inst.K.row(j))) / den, 1e-14);
    }
}

TEST(SaLayer, SingletonReturnsOwnValue) {
    const auto inst = oracle::random_instance(5, 6, 2, 3);
    const std::vector<int> S = {3};
    const Mat out = sa_layer(inst, S);
    EXPECT_TRUE(out.row(3).isApprox(inst.V.row(3), 1e-14));
}

TEST(SaLayer, OutsideRowsAreUniformMean) {
    const auto inst = oracle::random_instance(6, 6, 3, 3);
    const std::vector<int> S = {0, 2, 5};
    const Mat out = sa_layer(inst, S);
    const Vec mean = (inst.V.row(0) + inst.V.row(2) + inst.V.row(5)).transpose() / 3.0;
    for (int i : {1, 3, 4}) EXPECT_TRUE(out.row(i).transpose().isApprox(mean, 1e-14));
}

TEST(SaLayer, ZeroQueryKeyGivesMean) {
    auto inst = oracle::random_instance(7, 5, 3, 2);
    inst.Q.setZero();
    inst.K.setZero();
    const std::vector<int> S = {1, 2, 4};
    const Mat out = sa_layer(inst, S);
    const Vec mean = (inst.V.row(1) + inst.V.row(2) + inst.V.row(4)).transpose() / 3.0;
    for (int i : S) EXPECT_TRUE(out.row(i).transpose().isApprox(mean, 1e-14));
}

TEST(SaLayer, EmptySetRejected) {
    const auto inst = oracle::random_instance(8, 4, 2, 2);
    EXPECT_THROW(sa_layer(inst, std::vector<int>{}), ValidationError);
}

TEST(Objective, SingletonIsRewardOfValue) {
    const auto inst = oracle::random_instance(9, 6, 3, 3);
    for (int i = 0; i < inst.n; ++i) {
        const std::vector<int> S = {i};
        EXPECT_NEAR(objective_set(inst, S), inst.reward(i)(inst.V.row(i).dot(inst.u)), 1e-14);
    }
}

TEST(Objective, ZeroRewardsGiveZero) {
    auto inst = oracle::random_instance(10, 6, 3, 3, 1.0, false);
    inst.rewards = {RewardFunction::relu(0.0)};
    for (const auto& S : oracle::subsets(6, 3)) EXPECT_EQ(objective_set(inst, S), 0.0);
}

TEST(Objective, CardinalityViolationRejected) {
    const auto inst = oracle::random_instance(11, 6, 2, 3);
    EXPECT_THROW(objective_set(inst, std::vector<int>{0, 1, 2}), ValidationError);
    EXPECT_THROW(objective_set(inst, std::vector<int>{}), ValidationError);
}

TEST(Objective, FiveItemSetMatchesIndicatorForm) {
    const auto inst = oracle::random_instance(12, 5, 3, 4);
    const std::vector<int> S = {0, 2, 3};
    const Mat W = attention_matrix(inst);
    EXPECT_NEAR(objective_set(inst, S), objective_x(inst, W, indicator(5, S)), 1e-9);
    EXPECT_NEAR(objective_set(inst, S), oracle::objective_set(inst, S), 1e-12);
}

TEST(Objective, OneHotCollapses) {
    const auto inst = oracle::random_instance(13, 6, 3, 3);
    const Mat W = attention_matrix(inst);
    for (int i = 0; i < inst.n; ++i) {
        const std::vector<int> S = {i};
        EXPECT_NEAR(objective_x(inst, W, indicator(inst.n, S)), inst.reward(i)(inst.V.row(i).dot(inst.u)), 1e-14);
    }
}

TEST(Objective, RandomPairsAgreeWithBothOracles) {
    std::mt19937_64 gen(14);
    for (int t = 0; t < 100; ++t) {
        const int n = 3 + static_cast<int>(gen() % 8);
        const int k = 1 + static_cast<int>(gen() % std::min(n, 4));
        const auto inst = oracle::random_instance(gen(), n, k, 3);
        const Mat W = attention_matrix(inst);
        const auto all = oracle::subsets(n, k);
        const auto& S = all[gen() % all.size()];
        const auto x = indicator(n, S);
        const double a = objective_set(inst, S);
        EXPECT_NEAR(a, objective_x(inst, W, x), 1e-9);
        EXPECT_NEAR(a, oracle::objective_x(inst, x), 1e-9);
        EXPECT_NEAR(a, oracle::objective_set(inst, S), 1e-9);
    }
}

TEST(Objective, RowRescalingInvariance) {
    const auto inst = oracle::random_instance(15, 8, 4, 3);
    const Mat W = attention_matrix(inst);
    Mat W7 = 7.0 * W;
    Mat Wr = W;
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> U(0.01, 100.0);
    for (int i = 0; i < Wr.rows(); ++i) Wr.row(i) *= U(gen);
    for (const auto& S : oracle::subsets(8, 4)) {
        const auto x = indicator(8, S);
        const double v = objective_x(inst, W, x);
        EXPECT_NEAR(objective_x(inst, W7, x), v, 1e-12);
        EXPECT_NEAR(objective_x(inst, Wr, x), v, 1e-12);
    }
}

TEST(Objective, PermutationInvariance) {
    const auto inst = oracle::random_instance(16, 7, 4, 3);
    std::vector<int> S = {1, 3, 4, 6};
    const double v = objective_set(inst, S);
    std::sort(S.begin(), S.end());
    do {
        EXPECT_NEAR(objective_set(inst, S), v, 1e-13);
    } while (std::next_permutation(S.begin(), S.end()));
}

TEST(Objective, LargeValueScaleStaysFinite) {
    auto inst = oracle::random_instance(17, 4, 2, 2, 1.0, false);
    inst.rewards = {RewardFunction::exponential(1.0)};
    inst.V.setConstant(0.5);
    inst.u.setConstant(1.0);
    inst.value_log_scale = 0.0;
    const std::vector<int> S = {0, 1};
    const double v = objective_set(inst, S);
    EXPECT_NEAR(v, 2.0 * std::exp(1.0), 1e-12);
    EXPECT_NEAR(sa_output(inst, S, 0), std::exp(1.0), 1e-12);
}

TEST(PoolObjective, MatchesSetObjective) {
    const auto inst = oracle::random_instance(18, 10, 3, 3);
    const std::vector<int> items = {1, 2, 5, 7, 9};
    const PoolObjective pool(inst, items);
    for (const auto& local : oracle::subsets(5, 3)) {
        const auto global = pool.to_global(local);
        EXPECT_NEAR(pool.value(local), objective_set(inst, global), 1e-12);
    }
    for (int i = 0; i < pool.size(); ++i) EXPECT_NEAR(pool.weights().row(i).sum(), 1.0, 1e-12);
}

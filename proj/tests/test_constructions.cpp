// SPDX-License-Identifier: MIT
#include "attnopt/attention.hpp"
#include "attnopt/constructions.hpp"
#include "attnopt/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace attnopt;

namespace {

VarietyModel two_item_model(double beta) {
    VarietyModel m;
    m.n = 2;
    m.k = 2;
    m.u_hat = Vec(2);
    m.u_hat << 1.5, 2.0;
    m.x = Mat(2, 2);
    m.x << 0.8, 0.6, 0.6, 0.8;
    m.lambda = {1.0};
    m.beta = beta;
    return m;
}

// Reference variety utility written from the model definition.
double direct(const VarietyModel& m, const std::vector<int>& seq, int pos) {
    double s = 0.0;
    for (int l = 1; l <= pos; ++l) {
        double dot = 0.0;
        for (int a = 0; a < m.d(); ++a) dot += m.x(seq[pos], a) * m.x(seq[pos - l], a);
        s += m.lambda[l - 1] * dot;
    }
    return m.u_hat(seq[pos]) * std::exp(m.beta * s);
}

HaloModel zero_halo(int n) {
    HaloModel m;
    m.n = n;
    m.v_hat = Mat(n, 2);
    for (int i = 0; i < n; ++i) {
        m.v_hat(i, 0) = 0.3 * i - 0.4;
        m.v_hat(i, 1) = 0.5 - 0.2 * i;
    }
    m.u_hat = Vec(2);
    m.u_hat << 1.0, -0.5;
    m.H = Mat::Zero(n, n);
    return m;
}

}  // namespace

TEST(VarietyDirect, FirstPositionIsBaseUtility) {
    const auto m = two_item_model(1.0);
    EXPECT_DOUBLE_EQ(variety_utility_direct(m, std::vector<int>{1, 0}, 0), 2.0);
}

TEST(VarietyDirect, ZeroBetaIsBaseUtility) {
    const auto m = two_item_model(0.0);
    EXPECT_DOUBLE_EQ(variety_utility_direct(m, std::vector<int>{0, 1}, 1), 2.0);
}

TEST(VarietyDirect, Substitution) {
    VarietyModel m = two_item_model(1.0);
    m.x << 1.0, 0.0, 0.5, std::sqrt(0.75);
    EXPECT_NEAR(variety_utility_direct(m, std::vector<int>{0, 1}, 1), 2.0 * std::exp(0.5), 1e-15);
    EXPECT_THROW(variety_utility_direct(m, std::vector<int>{0, 1}, 2), ValidationError);
}

TEST(VarietyTransformer, TwoItemModelAllSequences) {
    // The masked positions leak about beta e^{-M}, so the strength is kept small here.
    const auto m = two_item_model(0.1);
    const auto bt = build_variety_transformer(m, 6.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const std::vector<int> seq = {a, b};
            for (int pos = 0; pos < 2; ++pos) {
                const double want = direct(m, seq, pos);
                EXPECT_LE(std::abs(bt.evaluate(seq, pos) - want) / want, 1e-3);
            }
        }
}

TEST(VarietyTransformer, ErrorWithinDerivedBound) {
    for (double beta : {-1.0, 0.5, 1.0, 2.0})
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto m = random_variety_model(3, 3, 2, beta, seed);
            for (double M : {3.0, 5.0, 8.0}) {
                const auto bt = build_variety_transformer(m, M);
                EXPECT_LE(variety_max_error(m, bt), variety_precision_bound(m, M) * (1.0 + 1e-9));
            }
        }
}

TEST(VarietyTransformer, ZeroBetaRecoversBaseUtility) {
    const auto m = random_variety_model(3, 2, 2, 0.0, 4);
    const double M = 6.0;
    const auto bt = build_variety_transformer(m, M);
    const double tol = variety_precision_bound(m, M);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            if (a == b) continue;
            const std::vector<int> seq = {a, b};
            for (int pos = 0; pos < 2; ++pos) {
                const double u = m.u_hat(seq[pos]);
                const double out = bt.evaluate(seq, pos);
                EXPECT_NEAR(out, u, u * tol);
            }
        }
}

TEST(VarietyTransformer, ZeroLagWeightIsMasked) {
    VarietyModel m = two_item_model(1.0);
    m.lambda = {0.0};
    const auto bt = build_variety_transformer(m, 10.0);
    const std::vector<int> seq = {0, 1};
    EXPECT_NEAR(bt.evaluate(seq, 1) / m.u_hat(1), 1.0, 2e-4);
}

TEST(VarietyTransformer, RejectsNonPositiveCoordinates) {
    VarietyModel m = two_item_model(1.0);
    m.x << 1.0, 0.0, 0.6, 0.8;
    EXPECT_THROW(build_variety_transformer(m, 5.0), ValidationError);
    EXPECT_THROW(build_variety_transformer(two_item_model(1.0), 2.0, 1e-6), ValidationError);
}

TEST(VarietyTransformer, HeadIsValidInstance) {
    const auto m = random_variety_model(2, 2, 2, 1.0, 5);
    const auto bt = build_variety_transformer(m, 4.0);
    ASSERT_EQ(bt.heads.size(), 1u);
    EXPECT_NO_THROW(bt.heads[0].validate());
    EXPECT_EQ(bt.heads[0].n, 2 * 2 + 2 * 2 * 2 + 1 + 2 * 2);
}

TEST(HaloDirect, Values) {
    auto m = zero_halo(3);
    const double base = m.v_hat.row(1).dot(m.u_hat);
    EXPECT_DOUBLE_EQ(halo_utility_direct(m, std::vector<int>{0, 1, 2}, 1), base);
    EXPECT_DOUBLE_EQ(halo_utility_direct(m, std::vector<int>{1}, 1), base);
    m.H(0, 1) = 0.5;
    m.v_hat.row(0) << 1.0, 0.0;
    EXPECT_DOUBLE_EQ(halo_utility_direct(m, std::vector<int>{0, 1}, 0), 1.5);
    EXPECT_THROW(halo_utility_direct(m, std::vector<int>{0}, 1), ValidationError);
}

TEST(HaloTransformer, ZeroInteractionsSmallSets) {
    const auto m = zero_halo(4);
    const auto bt = build_halo_transformer(m, 8.0);
    for (int mask = 1; mask < 16; ++mask) {
        std::vector<int> S;
        for (int i = 0; i < 4; ++i)
            if (mask & (1 << i)) S.push_back(i);
        if (S.size() > 3) continue;
        for (int i : S) EXPECT_LE(std::abs(bt.evaluate(S, i) - m.v_hat.row(i).dot(m.u_hat)), 1e-3);
    }
}

TEST(HaloTransformer, BaseHeadAloneOnFullSet) {
    const auto m = random_halo_model(4, 2, 0.5, 3);
    const double M = 10.0;
    const auto bt = build_halo_transformer(m, M);
    const std::vector<int> all = {0, 1, 2, 3};
    for (int i = 0; i < 4; ++i) {
        const double want = m.v_hat.row(i).dot(m.u_hat);
        EXPECT_NEAR(bt.evaluate_head(2, all, i), want, 1e-3);
    }
}

TEST(HaloTransformer, AntisymmetricPairCancels) {
    auto m = random_halo_model(3, 2, 0.0, 4);
    m.H(0, 2) = 0.7;
    m.H(2, 0) = -0.7;
    const double M = 10.0;
    const auto bt = build_halo_transformer(m, M);
    const double eps = halo_precision_bound(m, M, bt.shift);
    const std::vector<int> S = {0, 2};
    const double want = m.v_hat.row(0).dot(m.u_hat) + m.v_hat.row(2).dot(m.u_hat);
    EXPECT_NEAR(bt.evaluate(S, 0) + bt.evaluate(S, 2), want, 2.0 * eps);
}

TEST(HaloTransformer, ErrorWithinBoundAndHeadsValid) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto m = random_halo_model(4, 3, 0.8, seed);
        for (double M : {4.0, 8.0, 12.0}) {
            const auto bt = build_halo_transformer(m, M);
            ASSERT_EQ(bt.heads.size(), 3u);
            for (const auto& h : bt.heads) EXPECT_NO_THROW(h.validate());
            EXPECT_LE(halo_max_error(m, bt), halo_precision_bound(m, M, bt.shift));
        }
    }
    EXPECT_THROW(build_halo_transformer(random_halo_model(3, 2, 1.0, 1), 1.0, 1e-6), ValidationError);
}

TEST(Constructions, ErrorNonIncreasingInM) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto vm = random_variety_model(3, 3, 2, 1.0, seed);
        const auto hm = random_halo_model(4, 2, 0.5, seed);
        double pv = kInf, ph = kInf;
        for (double M : {4.0, 6.0, 8.0, 10.0}) {
            const double ev = variety_max_error(vm, build_variety_transformer(vm, M));
            const double eh = halo_max_error(hm, build_halo_transformer(hm, M));
            EXPECT_LE(ev, pv);
            EXPECT_LE(eh, ph);
            pv = ev;
            ph = eh;
        }
    }
}

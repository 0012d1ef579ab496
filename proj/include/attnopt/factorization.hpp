// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/core.hpp"
#include "attnopt/retrieval.hpp"

#include <vector>

namespace attnopt {

/// W' = A B^T on the candidate items, entrywise within a ratio of the attention block.
struct NonnegFactorization {
    std::vector<int> items;  // global ids, sorted
    Mat A;                   // m x r
    Mat B;                   // m x r
    /// Measured: max over the block of max(W/W', W'/W) - 1.
    double gamma = 0.0;
    /// exp(2 delta Phi) - 1 for the partition that produced the clusters.
    double gamma_bound = 0.0;
    /// Inner index runs over K-clusters when true, over Q-clusters otherwise.
    bool by_key = true;
    std::vector<int> q_group;  // per local item
    std::vector<int> k_group;

    int r() const { return static_cast<int>(A.cols()); }
    int m() const { return static_cast<int>(items.size()); }
    Mat product() const { return A * B.transpose(); }
    double w_min() const;
};

/// exp(q_i^T k_j - max_j' q_i^T k_j') over items x items.
Mat attention_block(const Instance& inst, const std::vector<int>& items);

/// max over entries of max(W/W', W'/W) - 1.
double ratio_deviation(const Mat& W, const Mat& Wp);

/// W'_ij = exp(q_{rep(a(i))}^T k_{rep(b(j))}) with representatives the lowest id of
/// each cluster; inner dimension min(#Q-clusters, #K-clusters) present in I.
NonnegFactorization build_w_prime(const Instance& inst, const std::vector<int>& I,
                                  const CoverPartition& part);

/// b'_j = b_j / |b_j|_1, a'_j = a_j |b_j|_1 (columns).
NonnegFactorization rescale_factorization(const NonnegFactorization& f);

struct RowRescaled {
    Mat W_I;  // row-stochastic
    NonnegFactorization f;
};

/// Normalizes the rows of W restricted to I and scales the rows of A by the same factors.
RowRescaled rescale_rows_on_I(const Mat& W_block, const NonnegFactorization& f);

}  // namespace attnopt

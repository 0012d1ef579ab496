// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/core.hpp"

#include <span>
#include <vector>

namespace attnopt {

/// Row-wise softmax with per-row max subtraction.
Mat softmax_rows(const Mat& A);

/// softmax(Q K^T). Throws ValidationError above the dense cap.
Mat attention_matrix(const Instance& inst);

/// Self-attention output for the selected set S.
/// Rows in S average the values of S with weights proportional to exp(q_i^T k_j), j in S.
/// Rows outside S hold the plain mean of the values of S.
Mat sa_layer(const Instance& inst, std::span<const int> S);

/// f_row(SA(S)_row^T u) computed in log space, so huge value scales stay finite
/// whenever the true output is finite.
double sa_output(const Instance& inst, std::span<const int> S, int row);

/// Sum over i in S of f_i(SA(S)_i^T u).
double objective_set(const Instance& inst, std::span<const int> S);

/// Sum_i x_i f_i((w_i . Vu)^T x / w_i^T x).
double objective_x(const Instance& inst, const Mat& W, std::span<const char> x);
double objective_x(const Instance& inst, const Mat& W, const Vec& vu, std::span<const char> x);

/// Set objective restricted to a pool of items, with the pool's attention block cached.
class PoolObjective {
public:
    PoolObjective(const Instance& inst, std::vector<int> items);

    int size() const { return static_cast<int>(items_.size()); }
    int k() const { return k_; }
    const std::vector<int>& items() const { return items_; }
    /// Row-stochastic attention restricted to the pool.
    const Mat& weights() const { return W_; }
    const Vec& values() const { return vu_; }
    const RewardFunction& reward(int local) const { return *rewards_[local]; }

    /// Objective of a set of local indices.
    double value(std::span<const int> local) const;
    double value_x(std::span<const char> x) const;

    std::vector<int> to_global(std::span<const int> local) const;

private:
    std::vector<int> items_;
    int k_;
    Mat W_;
    Vec vu_;
    std::vector<const RewardFunction*> rewards_;
};

}  // namespace attnopt

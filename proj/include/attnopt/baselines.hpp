// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/attention.hpp"
#include "attnopt/core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace attnopt {

/// Rank tuples (b_1, ..., b_k), ranks 1-based.
struct BeamSpec {
    std::vector<std::vector<int>> tuples;
    long budget = 0;

    void validate() const;
};

/// The first `budget` tuples in lexicographic order over ranks 1..B, with B the
/// smallest value such that B^k >= budget unless max_rank is given.
BeamSpec beam_tuples(int k, long budget, int max_rank = 0);

struct MethodResult {
    Selection selection;  // global ids
    std::vector<CandidateRecord> trace;
};

/// Grows each tuple's set by the b_l-th best marginal gain (ties by id) over the pool.
/// A tuple whose rank exceeds the remaining items stops early.
MethodResult beam_search(const PoolObjective& pool, const BeamSpec& spec);
MethodResult greedy(const PoolObjective& pool);

/// Top `size` items by v_i^T u, ties by id, returned sorted.
std::vector<int> knn_retrieval(const Instance& inst, int size);

struct BruteForceResult {
    std::vector<int> indices;  // in [0, m)
    double objective = -kInf;
    long evaluations = 0;
};

inline constexpr long kBruteForceCap = 2'000'000;

/// Exact argmax over all non-empty subsets of [0, m) with at most k elements; ties go to
/// the lexicographically smallest index set. Throws ValidationError above the cap.
BruteForceResult brute_force(int m, int k, const std::function<double(std::span<const int>)>& objective,
                             long cap = kBruteForceCap);
Selection brute_force(const Instance& inst, int k, long cap = kBruteForceCap);
Selection brute_force(const PoolObjective& pool, long cap = kBruteForceCap);

}  // namespace attnopt

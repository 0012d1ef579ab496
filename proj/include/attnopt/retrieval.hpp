// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/ann.hpp"
#include "attnopt/core.hpp"

#include <vector>

namespace attnopt {

/// delta = min{1/(140 Phi), eps/(34 Phi a + 1)} with a = max_i |(Vu)_i|.
/// Returns +inf when Phi = 0 (one cell).
double choose_delta(const Instance& inst, double eps);

struct Cell {
    int q_cluster = 0;
    int k_cluster = 0;
    int reward_id = 0;
    std::vector<int> members;
};

struct CoverPartition {
    double delta = kInf;
    double phi = 0.0;
    std::vector<int> q_centers;  // item id of each Q-cluster center
    std::vector<int> k_centers;
    std::vector<int> q_cluster;  // per item
    std::vector<int> k_cluster;
    std::vector<Cell> cells;

    int q_clusters() const { return static_cast<int>(q_centers.size()); }
    int k_clusters() const { return static_cast<int>(k_centers.size()); }
    /// Largest within-cell distance among Q rows and among K rows.
    double max_diameter(const Instance& inst) const;
};

/// Greedy maximal delta/2-separated centers in ascending id order, nearest-center
/// assignment, product with the reward partition.
CoverPartition build_cover_partition(const Instance& inst, double delta);

struct CandidateSet {
    std::vector<int> ids;                   // sorted
    std::vector<std::vector<int>> per_cell; // aligned with CoverPartition::cells
};

/// Additive ANN slack used inside each cell: min(delta, eps / (35 Phi a)).
double phase_one_ann_eps(const Instance& inst, double eps, double delta);

CandidateSet phase_one_query(const CoverPartition& part, const Instance& inst, int k, double eps_ann,
                             AnnBackend backend = AnnBackend::Exact);

}  // namespace attnopt

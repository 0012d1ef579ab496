// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/core.hpp"

#include <memory>
#include <vector>

namespace attnopt {

enum class AnnBackend { Exact, LiftedTree };

std::string_view to_string(AnnBackend b);
AnnBackend parse_ann_backend(std::string_view name);

struct SphereLift {
    Mat points;  // n x (d + 1), unit rows
    Vec query;   // d + 1, unit
    double v_max = 0.0;
    double u_norm = 0.0;

    /// v_i^T u recovered from the lifted distance.
    double inner_product(int i) const;
};

/// v'_i = (sqrt(v_max^2 - |v_i|^2), v_i) / v_max,  u' = (0, u) / |u|.
SphereLift lift_to_sphere(const Mat& points, const Vec& query);

/// Additive-slack top-k inner product search over a fixed point set.
class AnnIndex {
public:
    AnnIndex(Mat points, std::vector<int> ids, AnnBackend backend, std::uint64_t seed = 0x5eed,
             int leaf_size = 8);
    ~AnnIndex();
    AnnIndex(AnnIndex&&) noexcept;
    AnnIndex& operator=(AnnIndex&&) noexcept;

    int size() const { return static_cast<int>(ids_.size()); }
    AnnBackend backend() const { return backend_; }
    const std::vector<int>& ids() const { return ids_; }
    const Mat& points() const { return points_; }
    double v_max() const { return v_max_; }

    /// Ids ordered by decreasing inner product (ties by id). The j-th returned
    /// inner product is at least the j-th exact one minus eps.
    std::vector<int> query(const Vec& u, int k, double eps) const;

    /// Points examined by the last query on this thread.
    static std::size_t last_visited();

private:
    struct Tree;
    Mat points_;
    std::vector<int> ids_;
    AnnBackend backend_;
    double v_max_ = 0.0;
    std::unique_ptr<Tree> tree_;
};

std::vector<int> k_ann_query(const AnnIndex& idx, const Vec& u, int k, double eps);

/// Exact top-k of v_i^T u, ties by ascending id.
std::vector<int> exact_top_k(const Mat& points, const std::vector<int>& ids, const Vec& u, int k);

/// Pure-embedding problem: partition by reward, query each group, keep the best k by f_i(v_i^T u),
/// dropping non-positive rewards.
Selection pure_embedding_solve(const Instance& inst, double eps, AnnBackend backend = AnnBackend::Exact);

}  // namespace attnopt

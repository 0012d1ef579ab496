// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace attnopt {

/// Sequential variety-adjusted utility model.
struct VarietyModel {
    int n = 0;
    int k = 0;
    Vec u_hat;                   // base utilities, positive
    Mat x;                       // n x d unit-norm similarity embeddings
    std::vector<double> lambda;  // lag weights lambda_1 .. lambda_{k-1}
    double beta = 0.0;

    int d() const { return static_cast<int>(x.cols()); }
    void validate() const;
};

/// Interaction-adjusted (halo) utility model.
struct HaloModel {
    int n = 0;
    Mat v_hat;  // n x d
    Vec u_hat;  // d
    Mat H;      // n x n, zero diagonal

    void validate() const;
};

/// u_hat[s_t] * exp(beta * sum_{l=1}^{t-1} lambda_l x_{s_t}^T x_{s_{t-l}}), with t = pos + 1.
double variety_utility_direct(const VarietyModel& m, std::span<const int> seq, int pos);

/// v_hat_i^T u_hat + sum_{j in S} H_ij.
double halo_utility_direct(const HaloModel& m, std::span<const int> S, int i);

enum class ConstructionKind { Variety, Halo };

/// Explicit simple transformer realizing a utility model, plus the map from
/// model-level sequences or sets to transformer-level index sets.
struct BuiltTransformer {
    ConstructionKind kind = ConstructionKind::Variety;
    double M = 0.0;
    int n = 0;
    int k = 0;
    int d = 0;
    double shift = 0.0;
    std::vector<Instance> heads;

    int row_position(int item, int pos) const;
    int row_component(int item, int pos, int comp) const;
    int row_dummy() const;
    int row_base(int item, int pos) const;

    /// Transformer-level set for one head. Variety takes a sequence, halo a set.
    std::vector<int> lift(int head, std::span<const int> S) const;

    /// Variety: approximation of the utility at sequence position `where`.
    /// Halo: approximation of g(S, where), summed over heads.
    double evaluate(std::span<const int> S, int where) const;
    double evaluate_head(int head, std::span<const int> S, int where) const;
};

/// Relative error bound expm1(|beta| k e^{-M} + O(e^{-M^3})); the e^{-M} term is the masked-position leak.
double variety_precision_bound(const VarietyModel& m, double M);

/// e^{-M}(X^2 + Y^2 + 2(n-1) max_i |v_hat_i^T u_hat|) with X, Y the largest row sums
/// of exp(A) and exp(B).
double halo_precision_bound(const HaloModel& m, double M, double shift);

BuiltTransformer build_variety_transformer(const VarietyModel& m, double M,
                                           std::optional<double> tolerance = std::nullopt);

BuiltTransformer build_halo_transformer(const HaloModel& m, double M,
                                        std::optional<double> tolerance = std::nullopt,
                                        double shift = 1.01);

}  // namespace attnopt

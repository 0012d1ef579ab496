// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/core.hpp"
#include "attnopt/factorization.hpp"
#include "attnopt/retrieval.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace attnopt {

/// Phase-two input on the candidate items, all indices local to I.
struct RankingProblem {
    int m = 0;
    int k = 0;
    double eps = 0.1;
    std::vector<int> items;  // global ids
    Mat W_I;                 // row-stochastic attention on I
    Mat A;                   // m x r, non-negative
    Mat B;                   // m x r, non-negative, columns sum to 1
    Mat Wp;                  // A B^T
    Mat D;                   // r x m, D(j, i) = B(i, j) (Vu)_i
    Vec vu;
    std::vector<RewardFunction> rewards;  // per local item
    double gamma = 0.0;
    double w_min = 0.0;

    int r() const { return static_cast<int>(A.cols()); }
    double vu_max() const { return vu.maxCoeff(); }
    double vu_min() const { return vu.minCoeff(); }
    /// max_i f_i((Vu)_max).
    double f_max() const;

    void validate() const;

    /// Objective on W_I, which equals the set objective of the selected items.
    double objective_p(std::span<const char> x) const;
    /// Objective with W' in place of W_I.
    double objective_p_prime(std::span<const char> x) const;
    std::vector<int> to_global(std::span<const char> x) const;
};

/// From precomputed parts. A and B are rescaled so B's columns sum to 1.
RankingProblem make_ranking_problem(const Mat& W_I, const Mat& A, const Mat& B, const Vec& vu,
                                    std::vector<RewardFunction> rewards, int k, double eps,
                                    std::vector<int> items = {});

/// Factorization on I, column rescaling, row rescaling.
RankingProblem build_ranking_problem(const Instance& inst, const std::vector<int>& I,
                                     const CoverPartition& part, double eps);

/// ceil((2r+2) (Vu)_max / eps), at least 1.
int default_lambda(const RankingProblem& rp);
/// ceil((2r+2) max_i f_i((Vu)_max) / eps), at least 1.
int default_lambda_prime(const RankingProblem& rp);

/// Strict order per direction j: d_j descending, then id ascending.
struct TieOrders {
    std::vector<std::vector<int>> order;  // order[j][pos] = item
    std::vector<std::vector<int>> rank;   // rank[j][item] = pos

    static TieOrders from_scores(const Mat& scores);  // rows are directions
    std::vector<int> top(int j, std::span<const int> set, int count) const;
};

struct ValidTuple {
    int lambda = 1;
    bool small = false;                  // |X_j| < lambda, every X_j equals U
    std::vector<std::vector<int>> X;     // per direction, in order j
    std::vector<std::vector<int>> X_hat; // per direction, sorted
    std::vector<int> U;                  // union of X, sorted
    std::vector<int> hat_union;          // sorted
    double score = 0.0;                  // sum_j sum_{X_j} d_j
};

/// Builds the tuple anchored at U: X_j = top-lambda of U in order j.
ValidTuple tuple_from_set(const RankingProblem& rp, const TieOrders& ord, std::vector<int> U, int lambda);

/// Overlap-counter walk: each X_j has size lambda, |U| <= k, and no element of
/// U outside X_j precedes the last element of X_j in order j.
bool is_valid_tuple(const RankingProblem& rp, const TieOrders& ord,
                    const std::vector<std::vector<int>>& X, int lambda);

/// The tuple a feasible x corresponds to.
ValidTuple corresponding_tuple(const RankingProblem& rp, const TieOrders& ord, std::span<const char> x,
                               int lambda);

/// Every small tuple (sizes 1..min(lambda-1, k)) and every valid lambda-tuple whose union
/// lies in pool (all items when empty), in lexicographic order of U.
std::vector<ValidTuple> enumerate_tuples(const RankingProblem& rp, const TieOrders& ord, int lambda,
                                         std::span<const int> pool = {});

struct AuxiliaryProblem {
    const ValidTuple* tuple = nullptr;
    Vec t;                   // denominator guesses, within [w_min, 1 + gamma]
    Mat C;                   // m x r, c_i = a_i / t_i
    std::vector<int> cell;   // lattice cell of the y-cover
};

AuxiliaryProblem make_auxiliary(const RankingProblem& rp, const ValidTuple& X, Vec t);

/// Objective of the auxiliary problem: sum_i x_i f_i(c_i^T D x).
double objective_aux(const RankingProblem& rp, const AuxiliaryProblem& aux, std::span<const char> x);

/// x corresponds to X, |x| <= k and W' x <= t.
bool feasible_aux(const RankingProblem& rp, const AuxiliaryProblem& aux, std::span<const char> x,
                  double tol = 1e-9);

struct XPrime {
    std::vector<int> items;  // chosen free items
    std::vector<int> hat;    // free items ranked before the last chosen one
};

/// Subsets of the ranked free items by size ascending (0..lambda_prime), then
/// lexicographically in rank, with |U| + size <= k.
std::vector<XPrime> enumerate_x_prime(std::span<const int> ranked_free, int lambda_prime, int room);

enum class Scenario { One, Two };

struct OracleResult {
    Scenario scenario = Scenario::One;
    std::vector<char> z_bar;
    std::vector<double> z;  // vertex before rounding, or z_bar for forced solutions
    XPrime x_prime;
    bool from_lp = false;
    int fractional = 0;
    bool slack_ok = true;
    int lp_failures = 0;
    int lp_calls = 0;
};

struct OracleEvent {
    const RankingProblem* rp = nullptr;
    const AuxiliaryProblem* aux = nullptr;
    std::vector<double> theta;
    double zeta = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    int lambda_prime = 1;
    bool maximize = false;
    const OracleResult* result = nullptr;
};

using OracleObserver = std::function<void(const OracleEvent&)>;

/// Either finds x for the auxiliary problem with d_j^T x + delta1 >= theta_j and
/// sum_i x_i f_i(c_i^T theta) + delta2 >= zeta, or declares that no x meets both without
/// slack. With maximize set, the zeta row is replaced by maximizing sum_i x_i f_i(c_i^T theta).
OracleResult lp_round_oracle(const RankingProblem& rp, const AuxiliaryProblem& aux,
                             std::span<const double> theta, double zeta, double delta1, double delta2,
                             int lambda_prime, bool maximize = false);

struct RankingParams {
    double epsilon = 0.1;
    std::optional<int> lambda;
    std::optional<int> lambda_prime;
    /// Candidate cap. Switches on the heuristic tuple order.
    std::optional<long> budget;
    /// Estimated auxiliary-problem grid nodes above which the run degrades to budget mode.
    double work_cap = 2e6;
    long fallback_budget = 1000;
    int max_aux_per_tuple = 1;
    /// theta levels per direction in budget mode.
    int budget_grid_levels = 3;
    /// Budget mode: oracle calls with theta reset to D z of the current best.
    int budget_refine_steps = 4;
    /// Subsets scored when ordering tuples in budget mode.
    long pool_cap = 200000;
    OracleObserver observer;  // may be called from worker threads, serialized
};

struct RankingStats {
    long small_tuples = 0;
    long lambda_tuples = 0;
    long aux_problems = 0;
    long oracle_calls = 0;
    long scenario_two = 0;
    long lp_scenario_two = 0;
    long lp_calls = 0;
    long lp_failures = 0;
    long slack_violations = 0;
    int max_fractional = 0;
    int lambda = 1;
    int lambda_prime = 1;
    double estimated_work = 0.0;
    bool budget_mode = false;
    bool guarantee_suspended = false;
};

struct RankingResult {
    Selection selection;           // global ids, objective on W_I
    double objective_p_prime = 0.0;
    std::vector<CandidateRecord> trace;
    RankingStats stats;
};

/// Grid search with the LP oracle on one auxiliary problem. Returns the best rounded solution by the
/// auxiliary objective, or the forced partial solution when no grid node succeeds.
/// In budget mode an anchor solution, when given, supplies the first theta.
std::vector<char> solve_P_X_t(const RankingProblem& rp, const AuxiliaryProblem& aux, int lambda_prime,
                              const RankingParams& params, RankingStats& stats, bool budget_mode = false,
                              std::span<const char> anchor = {});

/// Lattice cells covering the reachable y = B^T x for tuple X.
struct TCover {
    double side = 0.0;
    std::vector<int> lo;  // inclusive cell index range per direction
    std::vector<int> hi;
    double cell_count() const;
    Vec t_of(const RankingProblem& rp, std::span<const int> cell) const;
};

TCover t_cover(const RankingProblem& rp, const ValidTuple& X);

/// Every cover cell for tuple X, best by W' objective.
std::vector<char> solve_P_X(const RankingProblem& rp, const ValidTuple& X, int lambda_prime,
                            const RankingParams& params, RankingStats& stats);

/// Enumerates valid tuples and solves each one; best candidate by the objective on W_I.
RankingResult enumerate_and_solve(const RankingProblem& rp, const RankingParams& params = {});

}  // namespace attnopt

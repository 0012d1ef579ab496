// SPDX-License-Identifier: MIT
#pragma once

#include "attnopt/ann.hpp"
#include "attnopt/constructions.hpp"
#include "attnopt/core.hpp"
#include "attnopt/ranking.hpp"
#include "attnopt/retrieval.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace attnopt {

/// Clustered synthetic instances.
struct GenSpec {
    int n = 40;
    int k = 4;
    int d_kq = 4;
    int d_v = 4;
    int q_clusters = 2;
    int k_clusters = 2;
    double spread = 0.0;        // per-coordinate standard deviation around the center
    double center_scale = 1.0;  // typical center norm
    std::vector<RewardFunction> rewards{RewardFunction::logistic()};
    std::uint64_t seed = 1;
    /// u = L mean(V[context]) with a random linear map L.
    bool user_from_context = false;
    int context_size = 3;

    void validate() const;
};

Instance generate(const GenSpec& spec);

struct RetrievalReport {
    double delta = kInf;
    double eps_ann = 0.0;
    CoverPartition partition;
    CandidateSet candidates;
};

RetrievalReport retrieve(const Instance& inst, double eps, AnnBackend backend = AnnBackend::Exact);

struct SolveParams {
    double epsilon = 0.1;
    AnnBackend backend = AnnBackend::Exact;
    RankingParams ranking;  // its epsilon is overwritten by `epsilon`
};

struct SolveReport {
    Selection selection;
    double objective_p_prime = 0.0;
    double delta = kInf;
    double eps_ann = 0.0;
    int q_clusters = 0;
    int k_clusters = 0;
    int cells = 0;
    std::vector<int> candidates;
    int r = 0;
    double gamma = 0.0;
    double gamma_bound = 0.0;
    double w_min = 0.0;
    RankingStats stats;
    std::vector<CandidateRecord> trace;
};

/// Ranking on a given candidate set, using the partition for the factorization.
RankingResult rank_candidates(const Instance& inst, const std::vector<int>& I, const CoverPartition& part,
                              const RankingParams& params);

/// Retrieval, factorization, rescaling, ranking.
SolveReport solve(const Instance& inst, const SolveParams& params);

/// "# schema: attnopt-trace v1" followed by instance,method,candidate,objective,cumulative_best,wall_us.
inline constexpr const char* kTraceSchema = "# schema: attnopt-trace v1";

struct TraceRow {
    long instance = 0;
    std::string method;
    long candidate = 0;  // 1-based
    double objective = 0.0;
    double cumulative_best = 0.0;
    double wall_us = 0.0;
};

std::vector<TraceRow> trace_rows(const std::string& method, const std::vector<CandidateRecord>& trace,
                                 long instance = 0, bool timing = true);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

/// Best objective among the first `budget` candidates, -inf when there are none.
double best_within(const std::vector<CandidateRecord>& trace, long budget);

struct BenchSpec {
    GenSpec gen;
    int instances = 10;
    std::vector<long> budgets{5, 10, 20};
    double epsilon = 0.1;
    RankingParams ranking;
    AnnBackend backend = AnnBackend::Exact;
    bool timing = false;
    long brute_cap = 200000;
};

struct BenchRun {
    std::string method;
    std::vector<CandidateRecord> trace;
};

struct BenchInstance {
    long index = 0;
    std::uint64_t seed = 0;
    int pool_size = 0;
    std::optional<double> brute_opt;
    std::vector<BenchRun> runs;

    const BenchRun& run(const std::string& method) const;
};

struct BenchReport {
    BenchSpec spec;
    std::vector<BenchInstance> instances;
};

inline constexpr const char* kOurs = "ours-ours";
inline constexpr const char* kOursBeam = "ours-beam";
inline constexpr const char* kKnnOurs = "knn-ours";
inline constexpr const char* kKnnBeam = "knn-beam";

/// {our retrieval, k-NN} x {our ranking, beam search} on spec.instances generated
/// instances with seeds gen.seed + index. k-NN retrieves as many items as ours.
BenchReport bench(const BenchSpec& spec);

void write_bench_traces(std::ostream& out, const BenchReport& report);
/// instance,budget,method,best
void write_bench_summary(std::ostream& out, const BenchReport& report);
/// instance,candidate,<a>,<b> for matched candidate indices.
void write_bench_pairs(std::ostream& out, const BenchReport& report, const std::string& a,
                       const std::string& b);

struct VerifyCheck {
    std::string name;
    bool ok = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool ok() const;
};

/// Invariant suite on one instance.
VerifyReport verify(const Instance& inst, double eps, std::uint64_t seed = 1);

VarietyModel random_variety_model(int n, int k, int d, double beta, std::uint64_t seed);
HaloModel random_halo_model(int n, int d, double h_scale, std::uint64_t seed);

/// Largest relative error over all sequences of distinct items and all positions.
double variety_max_error(const VarietyModel& m, const BuiltTransformer& bt);
/// Largest additive error over all non-empty sets and members.
double halo_max_error(const HaloModel& m, const BuiltTransformer& bt);

}  // namespace attnopt

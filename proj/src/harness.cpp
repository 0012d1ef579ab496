// SPDX-License-Identifier: MIT
#include "attnopt/harness.hpp"

#include "attnopt/attention.hpp"
#include "attnopt/baselines.hpp"
#include "attnopt/factorization.hpp"
#include "attnopt/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace attnopt {

void GenSpec::validate() const {
    if (n < 1 || k < 1 || k > n || d_kq < 1 || d_v < 1)
        throw ValidationError("generator: dimensions must be positive and k <= n");
    if (q_clusters < 1 || k_clusters < 1) throw ValidationError("generator: cluster counts must be positive");
    if (!(spread >= 0.0) || !(center_scale >= 0.0)) throw ValidationError("generator: spread and scale must be non-negative");
    if (rewards.empty() || static_cast<int>(rewards.size()) > n) throw ValidationError("generator: reward table size");
    for (const auto& f : rewards) f.validate();
    if (user_from_context && (context_size < 1 || context_size > n))
        throw ValidationError("generator: context size outside [1, n]");
}

Instance generate(const GenSpec& spec) {
    spec.validate();
    const Rng root(spec.seed);
    Rng centers_rng = root.fork(1), assign_rng = root.fork(2), noise_rng = root.fork(3), v_rng = root.fork(4),
        u_rng = root.fork(5);
    auto centers = [&](int count, int d) {
        Mat c(count, d);
        const double s = spec.center_scale / std::sqrt(static_cast<double>(d));
        for (int a = 0; a < count; ++a)
            for (int b = 0; b < d; ++b) c(a, b) = s * centers_rng.normal();
        return c;
    };
    const Mat qc = centers(spec.q_clusters, spec.d_kq);
    const Mat kc = centers(spec.k_clusters, spec.d_kq);

    Instance inst;
    inst.n = spec.n;
    inst.k = spec.k;
    inst.Q.resize(spec.n, spec.d_kq);
    inst.K.resize(spec.n, spec.d_kq);
    for (int i = 0; i < spec.n; ++i) {
        const int a = assign_rng.below(spec.q_clusters);
        const int b = assign_rng.below(spec.k_clusters);
        for (int c = 0; c < spec.d_kq; ++c) {
            inst.Q(i, c) = qc(a, c) + spec.spread * noise_rng.normal();
            inst.K(i, c) = kc(b, c) + spec.spread * noise_rng.normal();
        }
    }
    inst.V.resize(spec.n, spec.d_v);
    for (int i = 0; i < spec.n; ++i)
        for (int c = 0; c < spec.d_v; ++c) inst.V(i, c) = v_rng.normal();
    inst.u.resize(spec.d_v);
    if (spec.user_from_context) {
        Vec mean = Vec::Zero(spec.d_v);
        for (int a = 0; a < spec.context_size; ++a) mean += inst.V.row(u_rng.below(spec.n)).transpose();
        mean /= spec.context_size;
        Mat L(spec.d_v, spec.d_v);
        for (int a = 0; a < spec.d_v; ++a)
            for (int b = 0; b < spec.d_v; ++b) L(a, b) = u_rng.normal() / std::sqrt(static_cast<double>(spec.d_v));
        inst.u = L * mean;
    } else {
        for (int c = 0; c < spec.d_v; ++c) inst.u(c) = u_rng.normal();
    }
    inst.rewards = spec.rewards;
    inst.reward_of_item.resize(spec.n);
    for (int i = 0; i < spec.n; ++i) inst.reward_of_item[i] = i % inst.tau();
    inst.validate();
    return inst;
}

RetrievalReport retrieve(const Instance& inst, double eps, AnnBackend backend) {
    inst.validate();
    RetrievalReport rep;
    rep.delta = choose_delta(inst, eps);
    rep.partition = build_cover_partition(inst, rep.delta);
    rep.eps_ann = phase_one_ann_eps(inst, eps, rep.delta);
    rep.candidates = phase_one_query(rep.partition, inst, inst.k, rep.eps_ann, backend);
    return rep;
}

RankingResult rank_candidates(const Instance& inst, const std::vector<int>& I, const CoverPartition& part,
                              const RankingParams& params) {
    const auto rp = build_ranking_problem(inst, I, part, params.epsilon);
    return enumerate_and_solve(rp, params);
}

SolveReport solve(const Instance& inst, const SolveParams& params) {
    const auto ret = retrieve(inst, params.epsilon, params.backend);
    SolveReport rep;
    rep.delta = ret.delta;
    rep.eps_ann = ret.eps_ann;
    rep.q_clusters = ret.partition.q_clusters();
    rep.k_clusters = ret.partition.k_clusters();
    rep.cells = static_cast<int>(ret.partition.cells.size());
    rep.candidates = ret.candidates.ids;

    RankingParams rparams = params.ranking;
    rparams.epsilon = params.epsilon;
    const auto f = build_w_prime(inst, rep.candidates, ret.partition);
    rep.gamma_bound = f.gamma_bound;
    const auto rp = build_ranking_problem(inst, rep.candidates, ret.partition, params.epsilon);
    rep.r = rp.r();
    rep.gamma = rp.gamma;
    rep.w_min = rp.w_min;
    auto res = enumerate_and_solve(rp, rparams);
    rep.selection = std::move(res.selection);
    rep.objective_p_prime = res.objective_p_prime;
    rep.stats = res.stats;
    rep.trace = std::move(res.trace);
    return rep;
}

std::vector<TraceRow> trace_rows(const std::string& method, const std::vector<CandidateRecord>& trace,
                                 long instance, bool timing) {
    std::vector<TraceRow> rows;
    double best = -kInf;
    for (std::size_t a = 0; a < trace.size(); ++a) {
        best = std::max(best, trace[a].objective);
        rows.push_back({instance, method, static_cast<long>(a + 1), trace[a].objective, best,
                        timing ? trace[a].wall_us : 0.0});
    }
    return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
    out << kTraceSchema << '\n' << "instance,method,candidate,objective,cumulative_best,wall_us\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{:.17g},{:.17g},{:.3f}\n", r.instance, r.method, r.candidate, r.objective,
                           r.cumulative_best, r.wall_us);
}

double best_within(const std::vector<CandidateRecord>& trace, long budget) {
    double best = -kInf;
    for (long a = 0; a < std::min<long>(budget, static_cast<long>(trace.size())); ++a)
        best = std::max(best, trace[a].objective);
    return best;
}

const BenchRun& BenchInstance::run(const std::string& method) const {
    for (const auto& r : runs)
        if (r.method == method) return r;
    throw ValidationError(fmt::format("no bench run named '{}'", method));
}

BenchReport bench(const BenchSpec& spec) {
    if (spec.instances < 1 || spec.budgets.empty()) throw ValidationError("bench: need instances and budgets");
    for (long b : spec.budgets)
        if (b < 1) throw ValidationError("bench: budgets must be positive");
    const long top = *std::max_element(spec.budgets.begin(), spec.budgets.end());
    BenchReport report;
    report.spec = spec;
    report.instances.resize(spec.instances);
    parallel_for(static_cast<std::size_t>(spec.instances), [&](std::size_t idx) {
        GenSpec g = spec.gen;
        g.seed = spec.gen.seed + idx;
        const Instance inst = generate(g);
        BenchInstance& out = report.instances[idx];
        out.index = static_cast<long>(idx);
        out.seed = g.seed;
        const auto ret = retrieve(inst, spec.epsilon, spec.backend);
        const auto& ours = ret.candidates.ids;
        const auto knn = knn_retrieval(inst, static_cast<int>(ours.size()));
        out.pool_size = static_cast<int>(ours.size());

        RankingParams rparams = spec.ranking;
        rparams.epsilon = spec.epsilon;
        rparams.budget = top;
        const auto beams = beam_tuples(inst.k, top);
        auto ranked = [&](const std::vector<int>& I) { return rank_candidates(inst, I, ret.partition, rparams).trace; };
        auto beamed = [&](const std::vector<int>& I) { return beam_search(PoolObjective(inst, I), beams).trace; };
        out.runs.push_back({kOurs, ranked(ours)});
        out.runs.push_back({kOursBeam, beamed(ours)});
        out.runs.push_back({kKnnOurs, ranked(knn)});
        out.runs.push_back({kKnnBeam, beamed(knn)});
        double subsets = 0.0, c = 1.0;
        for (int s = 1; s <= inst.k; ++s) {
            c = c * (inst.n - s + 1) / s;
            subsets += c;
        }
        if (subsets <= static_cast<double>(spec.brute_cap)) out.brute_opt = brute_force(inst, inst.k).objective;
    });
    return report;
}

void write_bench_traces(std::ostream& out, const BenchReport& report) {
    std::vector<TraceRow> rows;
    for (const auto& inst : report.instances)
        for (const auto& run : inst.runs) {
            auto r = trace_rows(run.method, run.trace, inst.index, report.spec.timing);
            rows.insert(rows.end(), r.begin(), r.end());
        }
    write_trace_csv(out, rows);
}

void write_bench_summary(std::ostream& out, const BenchReport& report) {
    out << kTraceSchema << '\n' << "instance,budget,method,best,brute_force\n";
    for (const auto& inst : report.instances)
        for (long b : report.spec.budgets)
            for (const auto& run : inst.runs)
                out << fmt::format("{},{},{},{:.17g},{}\n", inst.index, b, run.method, best_within(run.trace, b),
                                   inst.brute_opt ? fmt::format("{:.17g}", *inst.brute_opt) : std::string());
}

void write_bench_pairs(std::ostream& out, const BenchReport& report, const std::string& a, const std::string& b) {
    out << kTraceSchema << '\n' << fmt::format("instance,candidate,{},{}\n", a, b);
    for (const auto& inst : report.instances) {
        const auto& ta = inst.run(a).trace;
        const auto& tb = inst.run(b).trace;
        for (std::size_t c = 0; c < std::min(ta.size(), tb.size()); ++c)
            out << fmt::format("{},{},{:.17g},{:.17g}\n", inst.index, c + 1, ta[c].objective, tb[c].objective);
    }
}

bool VerifyReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.ok; });
}

VerifyReport verify(const Instance& inst, double eps, std::uint64_t seed) {
    inst.validate();
    VerifyReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    Rng rng(seed);

    if (static_cast<std::size_t>(inst.n) <= config().dense_attention_cap) {
        const Mat W = attention_matrix(inst);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int size = 1 + rng.below(inst.k);
            std::vector<int> S;
            while (static_cast<int>(S.size()) < size) {
                const int i = rng.below(inst.n);
                if (std::find(S.begin(), S.end(), i) == S.end()) S.push_back(i);
            }
            std::sort(S.begin(), S.end());
            const double a = objective_set(inst, S);
            const double b = objective_x(inst, W, indicator(inst.n, S));
            worst = std::max(worst, std::abs(a - b));
        }
        add("objective-equivalence", worst <= 1e-9, fmt::format("max gap {:.3g}", worst));
    }

    const auto ret = retrieve(inst, eps);
    const double diam = ret.partition.max_diameter(inst);
    add("cover-diameter", !std::isfinite(ret.delta) || diam <= ret.delta * (1.0 + 1e-12),
        fmt::format("diameter {:.3g}, delta {:.3g}", diam, ret.delta));

    {
        AnnIndex tree(inst.V, [&] {
            std::vector<int> ids(inst.n);
            std::iota(ids.begin(), ids.end(), 0);
            return ids;
        }(), AnnBackend::LiftedTree, seed);
        const double slack = 1e-3;
        bool ok = true;
        for (int q = 0; q < 20 && ok; ++q) {
            Vec u(inst.d_v());
            for (int c = 0; c < inst.d_v(); ++c) u(c) = rng.normal();
            const auto got = tree.query(u, inst.k, slack);
            std::vector<double> exact;
            for (int i = 0; i < inst.n; ++i) exact.push_back(inst.V.row(i).dot(u));
            std::sort(exact.begin(), exact.end(), std::greater<>());
            for (int j = 0; j < inst.k; ++j)
                if (inst.V.row(got[j]).dot(u) < exact[j] - slack - 1e-12) ok = false;
        }
        add("ann-contract", ok, "lifted-tree vs exact, 20 queries");
    }

    const auto f = build_w_prime(inst, ret.candidates.ids, ret.partition);
    const bool gamma_ok = !std::isfinite(ret.delta) ? f.gamma <= 1e-9 : f.gamma <= f.gamma_bound * (1.0 + 1e-9) + 1e-12;
    add("factorization-ratio", gamma_ok && f.product().minCoeff() > 0.0,
        fmt::format("gamma {:.3g}, bound {:.3g}, r {}", f.gamma, f.gamma_bound, f.r()));

    const auto rp = build_ranking_problem(inst, ret.candidates.ids, ret.partition, eps);
    double row_gap = 0.0;
    for (int i = 0; i < rp.m; ++i) row_gap = std::max(row_gap, std::abs(rp.W_I.row(i).sum() - 1.0));
    add("rescaling", row_gap <= 1e-9, fmt::format("max row-sum gap {:.3g}", row_gap));

    RankingParams params;
    params.epsilon = eps;
    params.budget = 20;
    const auto res = enumerate_and_solve(rp, params);
    bool monotone = true;
    double best = -kInf;
    for (const auto& c : res.trace) {
        if (c.objective > best) best = c.objective;
        monotone = monotone && best >= c.objective;
    }
    add("ranking-rounding", res.stats.max_fractional <= 2 * rp.r() + 2 && res.stats.lp_failures == 0,
        fmt::format("max fractional {}, bound {}, lp failures {}", res.stats.max_fractional, 2 * rp.r() + 2,
                    res.stats.lp_failures));
    const double direct = objective_set(inst, res.selection.indices);
    add("selection-objective", std::abs(direct - res.selection.objective) <= 1e-9 * std::max(1.0, std::abs(direct)),
        fmt::format("reported {:.6g}, recomputed {:.6g}", res.selection.objective, direct));
    return rep;
}

VarietyModel random_variety_model(int n, int k, int d, double beta, std::uint64_t seed) {
    Rng rng(seed);
    VarietyModel m;
    m.n = n;
    m.k = k;
    m.beta = beta;
    m.u_hat.resize(n);
    m.x.resize(n, d);
    for (int i = 0; i < n; ++i) {
        m.u_hat(i) = 0.5 + 1.5 * rng.uniform();
        for (int a = 0; a < d; ++a) m.x(i, a) = 0.1 + rng.uniform();
        m.x.row(i).normalize();
    }
    for (int l = 1; l < k; ++l) m.lambda.push_back(rng.uniform());
    m.validate();
    return m;
}

HaloModel random_halo_model(int n, int d, double h_scale, std::uint64_t seed) {
    Rng rng(seed);
    HaloModel m;
    m.n = n;
    m.v_hat.resize(n, d);
    m.u_hat.resize(d);
    m.H = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) m.v_hat(i, a) = rng.normal() / std::sqrt(static_cast<double>(d));
    for (int a = 0; a < d; ++a) m.u_hat(a) = rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) m.H(i, j) = h_scale * (2.0 * rng.uniform() - 1.0);
    m.validate();
    return m;
}

namespace {

void sequences(int n, int k, std::vector<int>& cur, std::vector<char>& used,
               const std::function<void(const std::vector<int>&)>& fn) {
    if (static_cast<int>(cur.size()) == k) {
        fn(cur);
        return;
    }
    for (int i = 0; i < n; ++i) {
        if (used[i]) continue;
        used[i] = 1;
        cur.push_back(i);
        sequences(n, k, cur, used, fn);
        cur.pop_back();
        used[i] = 0;
    }
}

}  // namespace

double variety_max_error(const VarietyModel& m, const BuiltTransformer& bt) {
    double worst = 0.0;
    std::vector<int> cur;
    std::vector<char> used(m.n, 0);
    sequences(m.n, m.k, cur, used, [&](const std::vector<int>& seq) {
        for (int pos = 0; pos < m.k; ++pos) {
            const double direct = variety_utility_direct(m, seq, pos);
            const double built = bt.evaluate(seq, pos);
            worst = std::max(worst, std::abs(built - direct) / std::abs(direct));
        }
    });
    return worst;
}

double halo_max_error(const HaloModel& m, const BuiltTransformer& bt) {
    double worst = 0.0;
    for (int mask = 1; mask < (1 << m.n); ++mask) {
        std::vector<int> S;
        for (int i = 0; i < m.n; ++i)
            if (mask & (1 << i)) S.push_back(i);
        for (int i : S) worst = std::max(worst, std::abs(bt.evaluate(S, i) - halo_utility_direct(m, S, i)));
    }
    return worst;
}

}  // namespace attnopt

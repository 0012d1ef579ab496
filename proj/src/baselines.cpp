// SPDX-License-Identifier: MIT
#include "attnopt/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace attnopt {

void BeamSpec::validate() const {
    if (budget > 0 && static_cast<long>(tuples.size()) > budget)
        throw ValidationError("beam tuples: more tuples than the budget");
    for (const auto& t : tuples)
        for (int b : t)
            if (b < 1) throw ValidationError("beam tuples: ranks are 1-based");
}

BeamSpec beam_tuples(int k, long budget, int max_rank) {
    if (k < 1 || budget < 1) throw ValidationError("beam tuples: k and budget must be positive");
    int B = max_rank;
    if (B <= 0) {
        B = 1;
        while (std::pow(static_cast<double>(B), k) < static_cast<double>(budget)) ++B;
    }
    BeamSpec spec;
    spec.budget = budget;
    std::vector<int> t(k, 1);
    while (static_cast<long>(spec.tuples.size()) < budget) {
        spec.tuples.push_back(t);
        int p = k - 1;
        while (p >= 0 && t[p] == B) t[p--] = 1;
        if (p < 0) break;
        ++t[p];
    }
    return spec;
}

MethodResult beam_search(const PoolObjective& pool, const BeamSpec& spec) {
    spec.validate();
    if (pool.size() == 0) throw ValidationError("beam search: empty pool");
    const auto start = std::chrono::steady_clock::now();
    // Ranked marginal gains per chosen prefix.
    std::map<std::vector<int>, std::vector<std::pair<double, int>>> memo;
    auto ranked = [&](const std::vector<int>& prefix) -> const std::vector<std::pair<double, int>>& {
        auto it = memo.find(prefix);
        if (it != memo.end()) return it->second;
        const double base = prefix.empty() ? 0.0 : pool.value(prefix);
        std::vector<std::pair<double, int>> gains;
        std::vector<int> trial = prefix;
        trial.push_back(0);
        for (int i = 0; i < pool.size(); ++i) {
            if (std::find(prefix.begin(), prefix.end(), i) != prefix.end()) continue;
            trial.back() = i;
            gains.emplace_back(pool.value(trial) - base, i);
        }
        std::sort(gains.begin(), gains.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        return memo.emplace(prefix, std::move(gains)).first->second;
    };

    MethodResult out;
    out.selection.objective = -kInf;
    for (const auto& tuple : spec.tuples) {
        std::vector<int> S;
        for (int step = 0; step < std::min<int>(pool.k(), static_cast<int>(tuple.size())); ++step) {
            const auto& g = ranked(S);
            const int b = tuple[step];
            if (b > static_cast<int>(g.size())) break;
            S.push_back(g[b - 1].second);
        }
        if (S.empty()) continue;
        CandidateRecord rec;
        rec.objective = pool.value(S);
        rec.indices = pool.to_global(S);
        std::sort(rec.indices.begin(), rec.indices.end());
        rec.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
        if (rec.objective > out.selection.objective) {
            out.selection.objective = rec.objective;
            out.selection.indices = rec.indices;
        }
        out.trace.push_back(std::move(rec));
    }
    if (out.trace.empty()) out.selection.objective = 0.0;
    return out;
}

MethodResult greedy(const PoolObjective& pool) {
    BeamSpec spec;
    spec.tuples.push_back(std::vector<int>(pool.k(), 1));
    spec.budget = 1;
    return beam_search(pool, spec);
}

std::vector<int> knn_retrieval(const Instance& inst, int size) {
    if (size < 0 || size > inst.n) throw ValidationError(fmt::format("k-NN size {} out of range", size));
    std::vector<std::pair<double, int>> s;
    for (int i = 0; i < inst.n; ++i) s.emplace_back(inst.V.row(i).dot(inst.u), i);
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> out;
    for (int a = 0; a < size; ++a) out.push_back(s[a].second);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

void dfs(int m, int k, int from, std::vector<int>& cur,
         const std::function<double(std::span<const int>)>& objective, BruteForceResult& best) {
    for (int i = from; i < m; ++i) {
        cur.push_back(i);
        const double v = objective(cur);
        ++best.evaluations;
        if (v > best.objective) {
            best.objective = v;
            best.indices = cur;
        }
        if (static_cast<int>(cur.size()) < k) dfs(m, k, i + 1, cur, objective, best);
        cur.pop_back();
    }
}

}  // namespace

BruteForceResult brute_force(int m, int k, const std::function<double(std::span<const int>)>& objective,
                             long cap) {
    if (m < 1 || k < 1) throw ValidationError("brute force: m and k must be positive");
    double count = 0.0, c = 1.0;
    for (int s = 1; s <= std::min(m, k); ++s) {
        c = c * (m - s + 1) / s;
        count += c;
    }
    if (count > static_cast<double>(cap))
        throw ValidationError(fmt::format("brute force: {:.0f} subsets exceed the cap {}", count, cap));
    BruteForceResult best;
    std::vector<int> cur;
    dfs(m, k, 0, cur, objective, best);
    return best;
}

Selection brute_force(const Instance& inst, int k, long cap) {
    std::vector<int> all(inst.n);
    for (int i = 0; i < inst.n; ++i) all[i] = i;
    const PoolObjective pool(inst, std::move(all));
    const auto r = brute_force(inst.n, k, [&](std::span<const int> S) { return pool.value(S); }, cap);
    return {r.indices, r.objective};
}

Selection brute_force(const PoolObjective& pool, long cap) {
    const auto r = brute_force(pool.size(), pool.k(), [&](std::span<const int> S) { return pool.value(S); }, cap);
    auto ids = pool.to_global(r.indices);
    std::sort(ids.begin(), ids.end());
    return {ids, r.objective};
}

}  // namespace attnopt

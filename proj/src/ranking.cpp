// SPDX-License-Identifier: MIT
#include "attnopt/ranking.hpp"

#include "attnopt/lp.hpp"
#include "attnopt/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>

namespace attnopt {

namespace {

constexpr double kTol = 1e-9;

double slack(double v) { return kTol * std::max(1.0, std::abs(v)); }

double count_subsets(int n, int max_size) {
    double total = 0.0, c = 1.0;
    for (int s = 1; s <= std::min(n, max_size); ++s) {
        c = c * (n - s + 1) / s;
        total += c;
    }
    return total;
}

// Subsets of base with 1..max_size elements in lexicographic order; fn returns false to stop.
template <class F>
bool subsets_dfs(std::span<const int> base, int max_size, std::size_t from, std::vector<int>& cur, F& fn) {
    for (std::size_t a = from; a < base.size(); ++a) {
        cur.push_back(base[a]);
        if (!fn(cur)) return false;
        if (static_cast<int>(cur.size()) < max_size && !subsets_dfs(base, max_size, a + 1, cur, fn)) return false;
        cur.pop_back();
    }
    return true;
}

template <class F>
void for_each_subset(std::span<const int> base, int max_size, F fn) {
    std::vector<int> cur;
    if (max_size > 0) subsets_dfs(base, max_size, 0, cur, fn);
}

template <class F>
void for_each_combination(int n, int s, F fn) {
    if (s > n || s < 0) return;
    std::vector<int> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        int p = s - 1;
        while (p >= 0 && idx[p] == n - s + p) --p;
        if (p < 0) return;
        ++idx[p];
        for (int q = p + 1; q < s; ++q) idx[q] = idx[q - 1] + 1;
    }
}

std::vector<char> set_to_x(int m, std::span<const int> set) {
    std::vector<char> x(m, 0);
    for (int i : set) x[i] = 1;
    return x;
}

bool contains(const std::vector<int>& sorted, int v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

std::vector<int> free_items(const RankingProblem& rp, const ValidTuple& X) {
    std::vector<int> out;
    for (int i = 0; i < rp.m; ++i)
        if (!contains(X.U, i) && !contains(X.hat_union, i)) out.push_back(i);
    return out;
}

// Sum of the `count` largest (or smallest) values.
double extreme_sum(std::vector<double> v, int count, bool largest, bool sign_filter) {
    if (largest) std::sort(v.begin(), v.end(), std::greater<>());
    else std::sort(v.begin(), v.end());
    double s = 0.0;
    for (int a = 0; a < std::min<int>(count, static_cast<int>(v.size())); ++a) {
        if (sign_filter && (largest ? v[a] <= 0.0 : v[a] >= 0.0)) break;
        s += v[a];
    }
    return s;
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

// Achievable range of sum_i x_i v_i over x corresponding to X with |x| <= k.
Range achievable(const RankingProblem& rp, const ValidTuple& X, const std::vector<int>& free,
                 const std::function<double(int)>& v) {
    double base = 0.0;
    for (int i : X.U) base += v(i);
    std::vector<double> vals;
    for (int i : free) vals.push_back(v(i));
    const int room = rp.k - static_cast<int>(X.U.size());
    return {base + extreme_sum(vals, room, false, true), base + extreme_sum(vals, room, true, true)};
}

std::vector<std::vector<double>> theta_levels(const RankingProblem& rp, const ValidTuple& X,
                                              const std::vector<int>& free, bool budget_mode,
                                              int budget_levels) {
    std::vector<std::vector<double>> out(rp.r());
    const double d1 = rp.eps;
    const double nu_min = std::min(0.0, rp.vu_min());
    const double nu_max = std::max(0.0, rp.vu_max());
    for (int j = 0; j < rp.r(); ++j) {
        const Range rg = achievable(rp, X, free, [&](int i) { return rp.D(j, i); });
        if (budget_mode) {
            int L = std::max(1, budget_levels);
            while (L > 1 && std::pow(static_cast<double>(L), rp.r()) > 4096.0) --L;
            for (int l = 0; l < L; ++l) out[j].push_back(rg.lo + (rg.hi - rg.lo) * l / L);
            continue;
        }
        const long L = std::max(1L, static_cast<long>(std::ceil((nu_max - nu_min) / d1 - 1e-12)));
        double below = nu_min;
        for (long l = 0; l < L; ++l) {
            const double th = nu_min + d1 * static_cast<double>(l);
            if (th > rg.hi + slack(rg.hi)) break;
            if (th <= rg.lo) below = th;
            else out[j].push_back(th);
        }
        out[j].insert(out[j].begin(), below);
    }
    return out;
}

long zeta_level_count(const RankingProblem& rp) {
    const double d2 = rp.k * rp.eps;
    return std::max(1L, static_cast<long>(std::ceil(rp.k * std::max(rp.f_max(), 0.0) / d2 - 1e-12)));
}

double ring_distance(std::span<const int> a, std::span<const int> b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Odometer over the box [lo, hi]; fn returns false to stop.
template <class F>
void for_each_cell(const std::vector<int>& lo, const std::vector<int>& hi, F fn) {
    const std::size_t r = lo.size();
    for (std::size_t a = 0; a < r; ++a)
        if (lo[a] > hi[a]) return;
    std::vector<int> c = lo;
    while (true) {
        if (!fn(c)) return;
        std::size_t p = r;
        while (p > 0) {
            --p;
            if (c[p] < hi[p]) {
                ++c[p];
                for (std::size_t q = p + 1; q < r; ++q) c[q] = lo[q];
                break;
            }
            if (p == 0) return;
        }
        if (r == 0) return;
    }
}

// Marginal-gain completion of U on the objective over W_I, stopping when no free item helps.
std::vector<char> greedy_completion(const RankingProblem& rp, const ValidTuple& X) {
    auto x = set_to_x(rp.m, X.U);
    const auto free = free_items(rp, X);
    double cur = rp.objective_p(x);
    for (int count = static_cast<int>(X.U.size()); count < rp.k; ++count) {
        int pick = -1;
        double best = cur;
        for (int i : free) {
            if (x[i]) continue;
            x[i] = 1;
            const double v = rp.objective_p(x);
            x[i] = 0;
            if (v > best) {
                best = v;
                pick = i;
            }
        }
        if (pick < 0) break;
        x[pick] = 1;
        cur = best;
    }
    return x;
}

void merge_stats(RankingStats& into, const RankingStats& s) {
    into.aux_problems += s.aux_problems;
    into.oracle_calls += s.oracle_calls;
    into.scenario_two += s.scenario_two;
    into.lp_scenario_two += s.lp_scenario_two;
    into.lp_calls += s.lp_calls;
    into.lp_failures += s.lp_failures;
    into.slack_violations += s.slack_violations;
    into.max_fractional = std::max(into.max_fractional, s.max_fractional);
}

}  // namespace

double RankingProblem::f_max() const {
    double best = -kInf;
    const double top = vu_max();
    for (const auto& f : rewards) best = std::max(best, f(top));
    return best;
}

void RankingProblem::validate() const {
    if (m < 1 || k < 1) throw ValidationError("ranking problem: m and k must be positive");
    if (W_I.rows() != m || W_I.cols() != m || A.rows() != m || B.rows() != m || A.cols() != B.cols() ||
        vu.size() != m || static_cast<int>(rewards.size()) != m || D.rows() != A.cols() || D.cols() != m)
        throw ValidationError("ranking problem: dimension mismatch");
    if (!(eps > 0.0)) throw ValidationError("ranking problem: epsilon must be positive");
    for (int i = 0; i < m; ++i)
        if (std::abs(W_I.row(i).sum() - 1.0) > 1e-9) throw ValidationError("ranking problem: W_I is not row-stochastic");
    if ((A.array() < 0.0).any() || (B.array() < 0.0).any())
        throw ValidationError("ranking problem: factorization has a negative entry");
    for (int j = 0; j < r(); ++j)
        if (std::abs(B.col(j).sum() - 1.0) > 1e-9) throw ValidationError("ranking problem: B columns must sum to 1");
    if (!(w_min > 0.0)) throw ValidationError("ranking problem: W' must be strictly positive");
}

double RankingProblem::objective_p(std::span<const char> x) const {
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        if (!x[i]) continue;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < m; ++j)
            if (x[j]) {
                num += W_I(i, j) * vu(j);
                den += W_I(i, j);
            }
        total += rewards[i](num / den);
    }
    return total;
}

double RankingProblem::objective_p_prime(std::span<const char> x) const {
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        if (!x[i]) continue;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < m; ++j)
            if (x[j]) {
                num += Wp(i, j) * vu(j);
                den += Wp(i, j);
            }
        total += rewards[i](num / den);
    }
    return total;
}

std::vector<int> RankingProblem::to_global(std::span<const char> x) const {
    std::vector<int> out;
    for (int i = 0; i < m; ++i)
        if (x[i]) out.push_back(items.empty() ? i : items[i]);
    std::sort(out.begin(), out.end());
    return out;
}

RankingProblem make_ranking_problem(const Mat& W_I, const Mat& A, const Mat& B, const Vec& vu,
                                    std::vector<RewardFunction> rewards, int k, double eps,
                                    std::vector<int> items) {
    RankingProblem rp;
    rp.m = static_cast<int>(W_I.rows());
    rp.k = std::min(k, rp.m);
    rp.eps = eps;
    rp.W_I = W_I;
    rp.A = A;
    rp.B = B;
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        const double s = B.col(j).sum();
        if (!(s > 0.0)) throw ValidationError("ranking problem: factorization has an all-zero column");
        rp.B.col(j) /= s;
        rp.A.col(j) *= s;
    }
    rp.Wp = rp.A * rp.B.transpose();
    rp.vu = vu;
    rp.D = (rp.B.array().colwise() * vu.array()).matrix().transpose();
    rp.rewards = std::move(rewards);
    rp.items = std::move(items);
    if (rp.items.empty()) {
        rp.items.resize(rp.m);
        std::iota(rp.items.begin(), rp.items.end(), 0);
    }
    rp.w_min = rp.Wp.size() ? rp.Wp.minCoeff() : 0.0;
    if (rp.Wp.rows() == W_I.rows() && rp.Wp.cols() == W_I.cols() && rp.w_min > 0.0)
        rp.gamma = ratio_deviation(W_I, rp.Wp);
    rp.validate();
    return rp;
}

RankingProblem build_ranking_problem(const Instance& inst, const std::vector<int>& I,
                                     const CoverPartition& part, double eps) {
    const auto f = rescale_factorization(build_w_prime(inst, I, part));
    const auto rr = rescale_rows_on_I(attention_block(inst, f.items), f);
    const Vec all = inst.values();
    Vec vu(f.m());
    std::vector<RewardFunction> rewards;
    for (int a = 0; a < f.m(); ++a) {
        vu(a) = all(f.items[a]);
        rewards.push_back(inst.reward(f.items[a]));
    }
    return make_ranking_problem(rr.W_I, rr.f.A, rr.f.B, vu, std::move(rewards), inst.k, eps, f.items);
}

int default_lambda(const RankingProblem& rp) {
    const double v = (2.0 * rp.r() + 2.0) * rp.vu_max() / rp.eps;
    if (!(v > 1.0)) return 1;
    return static_cast<int>(std::min(std::ceil(v - 1e-12), static_cast<double>(rp.m + 1)));
}

int default_lambda_prime(const RankingProblem& rp) {
    const double v = (2.0 * rp.r() + 2.0) * rp.f_max() / rp.eps;
    if (!(v > 1.0)) return 1;
    return static_cast<int>(std::min(std::ceil(v - 1e-12), static_cast<double>(rp.m + 1)));
}

TieOrders TieOrders::from_scores(const Mat& scores) {
    TieOrders t;
    const int r = static_cast<int>(scores.rows());
    const int m = static_cast<int>(scores.cols());
    t.order.resize(r);
    t.rank.resize(r);
    for (int j = 0; j < r; ++j) {
        auto& o = t.order[j];
        o.resize(m);
        std::iota(o.begin(), o.end(), 0);
        std::sort(o.begin(), o.end(), [&](int a, int b) {
            return scores(j, a) != scores(j, b) ? scores(j, a) > scores(j, b) : a < b;
        });
        t.rank[j].resize(m);
        for (int p = 0; p < m; ++p) t.rank[j][o[p]] = p;
    }
    return t;
}

std::vector<int> TieOrders::top(int j, std::span<const int> set, int count) const {
    std::vector<int> s(set.begin(), set.end());
    std::sort(s.begin(), s.end(), [&](int a, int b) { return rank[j][a] < rank[j][b]; });
    if (static_cast<int>(s.size()) > count) s.resize(count);
    return s;
}

ValidTuple tuple_from_set(const RankingProblem& rp, const TieOrders& ord, std::vector<int> U, int lambda) {
    std::sort(U.begin(), U.end());
    ValidTuple t;
    t.lambda = lambda;
    const int r = rp.r();
    t.X.resize(r);
    t.X_hat.resize(r);
    if (static_cast<int>(U.size()) < lambda) {
        t.small = true;
        for (int j = 0; j < r; ++j) t.X[j] = ord.top(j, U, static_cast<int>(U.size()));
    } else {
        for (int j = 0; j < r; ++j) {
            t.X[j] = ord.top(j, U, lambda);
            const int last = ord.rank[j][t.X[j].back()];
            std::vector<int> sorted_x = t.X[j];
            std::sort(sorted_x.begin(), sorted_x.end());
            for (int p = 0; p < last; ++p) {
                const int it = ord.order[j][p];
                if (!contains(sorted_x, it)) t.X_hat[j].push_back(it);
            }
            std::sort(t.X_hat[j].begin(), t.X_hat[j].end());
            t.hat_union.insert(t.hat_union.end(), t.X_hat[j].begin(), t.X_hat[j].end());
        }
        std::sort(t.hat_union.begin(), t.hat_union.end());
        t.hat_union.erase(std::unique(t.hat_union.begin(), t.hat_union.end()), t.hat_union.end());
    }
    for (int j = 0; j < r; ++j)
        for (int i : t.X[j]) t.score += rp.D(j, i);
    t.U = std::move(U);
    return t;
}

bool is_valid_tuple(const RankingProblem& rp, const TieOrders& ord, const std::vector<std::vector<int>>& X,
                    int lambda) {
    if (static_cast<int>(X.size()) != rp.r()) return false;
    std::vector<int> U;
    for (const auto& xj : X) {
        if (static_cast<int>(xj.size()) != lambda) return false;
        U.insert(U.end(), xj.begin(), xj.end());
    }
    std::sort(U.begin(), U.end());
    U.erase(std::unique(U.begin(), U.end()), U.end());
    if (static_cast<int>(U.size()) > rp.k) return false;
    std::vector<char> in_u(rp.m, 0);
    for (int i : U) in_u[i] = 1;
    for (int j = 0; j < rp.r(); ++j) {
        std::vector<char> in_x(rp.m, 0);
        for (int i : X[j]) {
            if (in_x[i]) return false;
            in_x[i] = 1;
        }
        int counter = 0;
        for (int it : ord.order[j]) {
            if (counter == lambda) break;
            if (in_x[it]) ++counter;
            else if (in_u[it]) return false;
        }
    }
    return true;
}

ValidTuple corresponding_tuple(const RankingProblem& rp, const TieOrders& ord, std::span<const char> x,
                               int lambda) {
    const auto S = support(x);
    if (static_cast<int>(S.size()) < lambda) return tuple_from_set(rp, ord, S, lambda);
    std::vector<int> U;
    for (int j = 0; j < rp.r(); ++j) {
        auto top = ord.top(j, S, lambda);
        U.insert(U.end(), top.begin(), top.end());
    }
    std::sort(U.begin(), U.end());
    U.erase(std::unique(U.begin(), U.end()), U.end());
    return tuple_from_set(rp, ord, std::move(U), lambda);
}

std::vector<ValidTuple> enumerate_tuples(const RankingProblem& rp, const TieOrders& ord, int lambda,
                                         std::span<const int> pool) {
    std::vector<int> base;
    if (pool.empty()) {
        base.resize(rp.m);
        std::iota(base.begin(), base.end(), 0);
    } else {
        base.assign(pool.begin(), pool.end());
        std::sort(base.begin(), base.end());
    }
    const int small_max = std::min(lambda - 1, rp.k);
    const int big_max = std::min<long>(rp.k, static_cast<long>(rp.r()) * lambda);
    const int max_size = std::max(small_max, big_max);
    std::vector<ValidTuple> out;
    for_each_subset(base, max_size, [&](const std::vector<int>& U) {
        const int s = static_cast<int>(U.size());
        if (s < lambda) {
            out.push_back(tuple_from_set(rp, ord, U, lambda));
            return true;
        }
        auto t = tuple_from_set(rp, ord, U, lambda);
        std::vector<int> uni;
        for (const auto& xj : t.X) uni.insert(uni.end(), xj.begin(), xj.end());
        std::sort(uni.begin(), uni.end());
        uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
        if (uni == t.U && is_valid_tuple(rp, ord, t.X, lambda)) out.push_back(std::move(t));
        return true;
    });
    return out;
}

AuxiliaryProblem make_auxiliary(const RankingProblem& rp, const ValidTuple& X, Vec t) {
    if (t.size() != rp.m) throw ValidationError("auxiliary problem: t has the wrong length");
    AuxiliaryProblem aux;
    aux.tuple = &X;
    aux.C.resize(rp.m, rp.r());
    for (int i = 0; i < rp.m; ++i) {
        if (!(t(i) > 0.0)) throw ValidationError("auxiliary problem: t must be positive");
        aux.C.row(i) = rp.A.row(i) / t(i);
    }
    aux.t = std::move(t);
    return aux;
}

double objective_aux(const RankingProblem& rp, const AuxiliaryProblem& aux, std::span<const char> x) {
    Vec dx = Vec::Zero(rp.r());
    for (int i = 0; i < rp.m; ++i)
        if (x[i]) dx += rp.D.col(i);
    double total = 0.0;
    for (int i = 0; i < rp.m; ++i)
        if (x[i]) total += rp.rewards[i](aux.C.row(i).dot(dx));
    return total;
}

bool feasible_aux(const RankingProblem& rp, const AuxiliaryProblem& aux, std::span<const char> x, double tol) {
    const ValidTuple& X = *aux.tuple;
    int count = 0;
    for (int i = 0; i < rp.m; ++i) count += x[i] ? 1 : 0;
    if (count == 0 || count > rp.k) return false;
    if (X.small) {
        if (support(x) != X.U) return false;
    } else {
        for (int i : X.U)
            if (!x[i]) return false;
        for (int i : X.hat_union)
            if (x[i]) return false;
    }
    for (int i = 0; i < rp.m; ++i) {
        double w = 0.0;
        for (int j = 0; j < rp.m; ++j)
            if (x[j]) w += rp.Wp(i, j);
        if (w > aux.t(i) + tol * std::max(1.0, aux.t(i))) return false;
    }
    return true;
}

std::vector<XPrime> enumerate_x_prime(std::span<const int> ranked_free, int lambda_prime, int room) {
    std::vector<XPrime> out;
    const int n = static_cast<int>(ranked_free.size());
    for (int s = 0; s <= std::min(lambda_prime, room); ++s) {
        for_each_combination(n, s, [&](const std::vector<int>& pos) {
            XPrime xp;
            for (int p : pos) xp.items.push_back(ranked_free[p]);
            if (s == lambda_prime && s > 0) {
                std::size_t c = 0;
                for (int p = 0; p < pos.back(); ++p) {
                    if (c < pos.size() && pos[c] == p) {
                        ++c;
                        continue;
                    }
                    xp.hat.push_back(ranked_free[p]);
                }
            }
            out.push_back(std::move(xp));
        });
    }
    return out;
}

OracleResult lp_round_oracle(const RankingProblem& rp, const AuxiliaryProblem& aux,
                             std::span<const double> theta, double zeta, double delta1, double delta2,
                             int lambda_prime, bool maximize) {
    const ValidTuple& X = *aux.tuple;
    const int m = rp.m, r = rp.r();
    if (static_cast<int>(theta.size()) != r) throw ValidationError("oracle: theta has the wrong length");
    std::vector<double> g(m);
    Vec th = Eigen::Map<const Vec>(theta.data(), r);
    for (int i = 0; i < m; ++i) g[i] = rp.rewards[i](aux.C.row(i).dot(th));

    auto free = free_items(rp, X);
    std::sort(free.begin(), free.end(), [&](int a, int b) { return g[a] != g[b] ? g[a] > g[b] : a < b; });
    const int room = rp.k - static_cast<int>(X.U.size());

    auto dot_g = [&](const auto& x) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += g[i] * static_cast<double>(x[i]);
        return s;
    };
    auto packs = [&](const std::vector<char>& x) {
        int count = 0;
        for (char c : x) count += c;
        if (count == 0 || count > rp.k) return false;
        for (int i = 0; i < m; ++i) {
            double w = 0.0;
            for (int j = 0; j < m; ++j)
                if (x[j]) w += rp.Wp(i, j);
            if (w > aux.t(i) + slack(aux.t(i))) return false;
        }
        return true;
    };
    auto meets = [&](const std::vector<char>& x, double z_target, bool check_zeta) {
        if (!packs(x)) return false;
        for (int j = 0; j < r; ++j) {
            double d = 0.0;
            for (int i = 0; i < m; ++i)
                if (x[i]) d += rp.D(j, i);
            if (d < theta[j] - slack(theta[j])) return false;
        }
        return !check_zeta || dot_g(x) >= z_target - slack(z_target);
    };

    OracleResult best;
    bool have = false;
    int lp_calls = 0, lp_failures = 0;
    auto finish = [&](OracleResult res) {
        res.lp_calls = lp_calls;
        res.lp_failures = lp_failures;
        return res;
    };
    const auto candidates = enumerate_x_prime(free, lambda_prime, room);
    for (const auto& xp : candidates) {
        const bool forced = static_cast<int>(xp.items.size()) < lambda_prime;
        if (forced) {
            auto x = set_to_x(m, X.U);
            for (int i : xp.items) x[i] = 1;
            if (!meets(x, zeta, !maximize)) continue;
            OracleResult res;
            res.scenario = Scenario::Two;
            res.z.assign(x.begin(), x.end());
            res.z_bar = std::move(x);
            res.x_prime = xp;
            if (!maximize) return finish(std::move(res));
            if (!have || dot_g(res.z_bar) > dot_g(best.z_bar)) best = std::move(res);
            have = true;
            continue;
        }

        LpProblem ph(m);
        for (int i : X.U) ph.fix(i, 1.0);
        for (int i : X.hat_union) ph.fix(i, 0.0);
        for (int i : xp.items) ph.fix(i, 1.0);
        for (int i : xp.hat) ph.fix(i, 0.0);
        std::vector<double> row(m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) row[j] = rp.Wp(i, j);
            ph.add_row(row, RowSense::Le, aux.t(i) + slack(aux.t(i)));
        }
        ph.add_row(std::vector<double>(m, 1.0), RowSense::Le, rp.k);
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < m; ++i) row[i] = rp.D(j, i);
            ph.add_row(row, RowSense::Ge, theta[j] - slack(theta[j]));
        }
        if (maximize) ph.objective = g;
        else ph.add_row(g, RowSense::Ge, zeta - slack(zeta));
        ++lp_calls;
        const auto sol = lp_solve(ph, LpMode::Feasibility);
        if (sol.status == LpStatus::NumericalFailure) {
            ++lp_failures;
            continue;
        }
        if (!sol.ok()) continue;
        const auto& zs = sol.x;
        const double z_target = maximize ? dot_g(zs) : zeta;

        LpProblem red(m);
        red.lower = ph.lower;
        red.upper = ph.upper;
        for (int l = 0; l < r; ++l) {
            double cap = 0.0;
            for (int i = 0; i < m; ++i) {
                row[i] = rp.B(i, l);
                cap += rp.B(i, l) * zs[i];
            }
            red.add_row(row, RowSense::Le, cap + slack(cap));
        }
        const double total = std::accumulate(zs.begin(), zs.end(), 0.0);
        red.add_row(std::vector<double>(m, 1.0), RowSense::Le, total + slack(total));
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < m; ++i) row[i] = rp.D(j, i);
            red.add_row(row, RowSense::Ge, theta[j] - slack(theta[j]));
        }
        red.add_row(g, RowSense::Ge, z_target - slack(z_target));
        ++lp_calls;
        const auto vert = lp_solve(red, LpMode::Vertex);
        if (!vert.ok()) {
            ++lp_failures;
            continue;
        }
        std::vector<char> zb(m, 0);
        for (int i = 0; i < m; ++i) zb[i] = vert.x[i] >= 1.0 - 1e-9 ? 1 : 0;
        // Rounding down keeps every packing row; a failure here is numerical.
        if (!packs(zb)) {
            ++lp_failures;
            continue;
        }
        if (maximize) {
            // Refill the room freed by rounding down, keeping every packing and theta row.
            auto theta_ok = [&](const std::vector<char>& x) {
                for (int j = 0; j < r; ++j) {
                    double d = 0.0;
                    for (int i = 0; i < m; ++i)
                        if (x[i]) d += rp.D(j, i);
                    if (d + delta1 < theta[j] - slack(theta[j])) return false;
                }
                return true;
            };
            for (int i : free) {
                if (zb[i] || red.upper[i] < 1.0 || !(g[i] > 0.0)) continue;
                zb[i] = 1;
                if (!packs(zb) || !theta_ok(zb)) zb[i] = 0;
            }
        }
        OracleResult res;
        res.scenario = Scenario::Two;
        res.from_lp = true;
        res.z = vert.x;
        res.z_bar = std::move(zb);
        res.x_prime = xp;
        res.fractional = count_fractional(red, vert.x);
        bool ok = dot_g(res.z_bar) + delta2 >= z_target - slack(z_target);
        for (int j = 0; j < r && ok; ++j) {
            double d = 0.0;
            for (int i = 0; i < m; ++i)
                if (res.z_bar[i]) d += rp.D(j, i);
            ok = d + delta1 >= theta[j] - slack(theta[j]);
        }
        res.slack_ok = ok;
        if (!maximize) return finish(std::move(res));
        if (!have || dot_g(res.z_bar) > dot_g(best.z_bar)) best = std::move(res);
        have = true;
        break;
    }
    if (have) return finish(std::move(best));
    return finish(OracleResult{});
}

std::vector<char> solve_P_X_t(const RankingProblem& rp, const AuxiliaryProblem& aux, int lambda_prime,
                              const RankingParams& params, RankingStats& stats, bool budget_mode,
                              std::span<const char> anchor) {
    const ValidTuple& X = *aux.tuple;
    const auto free = free_items(rp, X);
    const auto levels = theta_levels(rp, X, free, budget_mode, params.budget_grid_levels);
    const double d1 = rp.eps, d2 = rp.k * rp.eps;
    const long zeta_levels = zeta_level_count(rp);
    ++stats.aux_problems;

    std::vector<char> best = set_to_x(rp.m, X.U);
    double best_val = -kInf;
    std::vector<int> node(rp.r(), 0);
    std::vector<int> lo(rp.r(), 0), hi(rp.r());
    for (int j = 0; j < rp.r(); ++j) hi[j] = static_cast<int>(levels[j].size()) - 1;
    std::vector<double> theta(rp.r());

    auto record = [&](const OracleResult& res, double zeta, bool maximize) {
        ++stats.oracle_calls;
        stats.lp_calls += res.lp_calls;
        stats.lp_failures += res.lp_failures;
        if (res.scenario == Scenario::Two) {
            ++stats.scenario_two;
            if (res.from_lp) {
                ++stats.lp_scenario_two;
                stats.max_fractional = std::max(stats.max_fractional, res.fractional);
            }
            if (!res.slack_ok) ++stats.slack_violations;
        }
        if (params.observer) {
            OracleEvent ev;
            ev.rp = &rp;
            ev.aux = &aux;
            ev.theta = theta;
            ev.zeta = zeta;
            ev.delta1 = d1;
            ev.delta2 = d2;
            ev.lambda_prime = lambda_prime;
            ev.maximize = maximize;
            ev.result = &res;
            params.observer(ev);
        }
    };
    auto consider = [&](const std::vector<char>& x) {
        const double v = objective_aux(rp, aux, x);
        if (v > best_val) {
            best_val = v;
            best = x;
        }
    };

    for_each_cell(lo, hi, [&](const std::vector<int>& c) {
        for (int j = 0; j < rp.r(); ++j) theta[j] = levels[j][c[j]];
        if (budget_mode) {
            const auto res = lp_round_oracle(rp, aux, theta, 0.0, d1, d2, lambda_prime, true);
            record(res, 0.0, true);
            if (res.scenario == Scenario::Two) consider(res.z_bar);
            return true;
        }
        Vec th = Eigen::Map<const Vec>(theta.data(), rp.r());
        std::vector<double> gv(rp.m);
        for (int i = 0; i < rp.m; ++i) gv[i] = rp.rewards[i](aux.C.row(i).dot(th));
        const Range gr = achievable(rp, X, free, [&](int i) { return gv[i]; });
        const double base = std::min(0.0, gr.lo);
        long top = zeta_levels - 1;
        while (top > 0 && base + d2 * static_cast<double>(top) > gr.hi + slack(gr.hi)) --top;
        for (long s = top; s >= 0; --s) {
            const double zeta = base + d2 * static_cast<double>(s);
            const auto res = lp_round_oracle(rp, aux, theta, zeta, d1, d2, lambda_prime, false);
            record(res, zeta, false);
            if (res.scenario == Scenario::Two) {
                consider(res.z_bar);
                break;
            }
        }
        return true;
    });
    if (budget_mode) {
        if (!anchor.empty()) {
            for (int j = 0; j < rp.r(); ++j) {
                theta[j] = 0.0;
                for (int i = 0; i < rp.m; ++i)
                    if (anchor[i]) theta[j] += rp.D(j, i);
            }
            const auto res = lp_round_oracle(rp, aux, theta, 0.0, d1, d2, lambda_prime, true);
            record(res, 0.0, true);
            if (res.scenario == Scenario::Two) consider(res.z_bar);
        }
        // Re-centre theta on the current best until the output repeats.
        std::vector<char> seen = best;
        for (int it = 0; it < params.budget_refine_steps && best_val > -kInf; ++it) {
            for (int j = 0; j < rp.r(); ++j) {
                theta[j] = 0.0;
                for (int i = 0; i < rp.m; ++i)
                    if (best[i]) theta[j] += rp.D(j, i);
            }
            const auto res = lp_round_oracle(rp, aux, theta, 0.0, d1, d2, lambda_prime, true);
            record(res, 0.0, true);
            if (res.scenario != Scenario::Two) break;
            consider(res.z_bar);
            if (res.z_bar == seen) break;
            seen = res.z_bar;
        }
    }
    return best;
}

double TCover::cell_count() const {
    double c = 1.0;
    for (std::size_t a = 0; a < lo.size(); ++a) c *= static_cast<double>(hi[a] - lo[a] + 1);
    return c;
}

Vec TCover::t_of(const RankingProblem& rp, std::span<const int> cell) const {
    Vec y(rp.r());
    for (int l = 0; l < rp.r(); ++l) y(l) = (cell[l] + 1) * side;
    Vec t = rp.A * y;
    for (int i = 0; i < rp.m; ++i) t(i) = std::clamp(t(i), rp.w_min, 1.0 + rp.gamma);
    return t;
}

TCover t_cover(const RankingProblem& rp, const ValidTuple& X) {
    TCover c;
    const int r = rp.r();
    const double dprime = rp.w_min * rp.eps / ((1.0 + rp.gamma) * std::sqrt(static_cast<double>(rp.k)));
    c.side = dprime / std::sqrt(static_cast<double>(r));
    const auto free = free_items(rp, X);
    c.lo.resize(r);
    c.hi.resize(r);
    for (int l = 0; l < r; ++l) {
        const Range rg = achievable(rp, X, free, [&](int i) { return rp.B(i, l); });
        c.lo[l] = static_cast<int>(std::floor(rg.lo / c.side));
        c.hi[l] = static_cast<int>(std::floor(std::min(rg.hi, 1.0) / c.side));
    }
    return c;
}

namespace {

struct TupleRun {
    std::vector<std::vector<char>> candidates;
    RankingStats stats;
};

double tuple_work(const RankingProblem& rp, const ValidTuple& X) {
    if (X.small) return 1.0;
    const auto free = free_items(rp, X);
    const auto levels = theta_levels(rp, X, free, false, 0);
    double nodes = static_cast<double>(zeta_level_count(rp));
    for (const auto& l : levels) nodes *= static_cast<double>(l.size());
    return t_cover(rp, X).cell_count() * nodes;
}

void run_tuple(const RankingProblem& rp, const ValidTuple& X, int lambda_prime, const RankingParams& params,
               bool budget_mode, long max_candidates, TupleRun& out) {
    if (X.small) {
        out.candidates.push_back(set_to_x(rp.m, X.U));
        return;
    }
    const TCover cover = t_cover(rp, X);
    std::vector<char> g;
    auto solve_cell = [&](const std::vector<int>& cell) {
        auto aux = make_auxiliary(rp, X, cover.t_of(rp, cell));
        aux.cell = cell;
        out.candidates.push_back(solve_P_X_t(rp, aux, lambda_prime, params, out.stats, budget_mode, g));
        return static_cast<long>(out.candidates.size()) < max_candidates;
    };
    if (!budget_mode) {
        for_each_cell(cover.lo, cover.hi, solve_cell);
        return;
    }
    g = greedy_completion(rp, X);
    std::vector<int> center(rp.r());
    for (int l = 0; l < rp.r(); ++l) {
        double y = 0.0;
        for (int i = 0; i < rp.m; ++i)
            if (g[i]) y += rp.B(i, l);
        center[l] = std::clamp(static_cast<int>(std::floor(y / cover.side)), cover.lo[l], cover.hi[l]);
    }
    int max_ring = 0;
    for (int l = 0; l < rp.r(); ++l)
        max_ring = std::max({max_ring, center[l] - cover.lo[l], cover.hi[l] - center[l]});
    bool more = true;
    for (int rho = 0; rho <= max_ring && more; ++rho) {
        std::vector<int> lo(rp.r()), hi(rp.r());
        for (int l = 0; l < rp.r(); ++l) {
            lo[l] = std::max(cover.lo[l], center[l] - rho);
            hi[l] = std::min(cover.hi[l], center[l] + rho);
        }
        for_each_cell(lo, hi, [&](const std::vector<int>& cell) {
            if (ring_distance(cell, center) != rho) return true;
            more = solve_cell(cell);
            return more;
        });
    }
}

}  // namespace

std::vector<char> solve_P_X(const RankingProblem& rp, const ValidTuple& X, int lambda_prime,
                            const RankingParams& params, RankingStats& stats) {
    TupleRun run;
    run_tuple(rp, X, lambda_prime, params, false, std::numeric_limits<long>::max(), run);
    merge_stats(stats, run.stats);
    std::vector<char> best;
    double best_val = -kInf;
    for (const auto& x : run.candidates) {
        const double v = rp.objective_p_prime(x);
        if (v > best_val) {
            best_val = v;
            best = x;
        }
    }
    return best;
}

RankingResult enumerate_and_solve(const RankingProblem& rp, const RankingParams& params_in) {
    rp.validate();
    const auto start = std::chrono::steady_clock::now();
    RankingParams params = params_in;
    if (params_in.observer) {
        auto mtx = std::make_shared<std::mutex>();
        params.observer = [mtx, obs = params_in.observer](const OracleEvent& e) {
            std::lock_guard lock(*mtx);
            obs(e);
        };
    }
    RankingResult result;
    RankingStats& stats = result.stats;
    const TieOrders ord = TieOrders::from_scores(rp.D);

    bool budget_mode = params.budget.has_value();
    long budget = params.budget.value_or(0);
    auto pick_lambdas = [&] {
        stats.lambda = params.lambda.value_or(budget_mode ? 1 : default_lambda(rp));
        stats.lambda_prime = params.lambda_prime.value_or(budget_mode ? 1 : default_lambda_prime(rp));
        if (stats.lambda < 1 || stats.lambda_prime < 1) throw ValidationError("lambda must be positive");
    };
    auto max_size = [&] {
        return std::max(std::min(stats.lambda - 1, rp.k),
                        static_cast<int>(std::min<long>(rp.k, static_cast<long>(rp.r()) * stats.lambda)));
    };
    pick_lambdas();

    std::vector<ValidTuple> tuples;
    if (!budget_mode) {
        double work = count_subsets(rp.m, max_size());
        if (work <= params.work_cap) {
            tuples = enumerate_tuples(rp, ord, stats.lambda);
            work = 0.0;
            for (const auto& t : tuples) {
                work += tuple_work(rp, t);
                if (work > params.work_cap) break;
            }
        }
        stats.estimated_work = work;
        if (work > params.work_cap) {
            spdlog::warn("ranking: estimated work {:.3g} exceeds cap {:.3g}; guarantees suspended, "
                         "running with a budget of {} candidates",
                         work, params.work_cap, params.fallback_budget);
            budget_mode = true;
            budget = params.fallback_budget;
            stats.guarantee_suspended = true;
            tuples.clear();
            pick_lambdas();
        }
    }
    stats.budget_mode = budget_mode;
    if (budget_mode) {
        if (budget < 1) throw ValidationError("candidate budget must be positive");
        std::vector<int> pool;
        for (int P = 1; P <= rp.m; ++P) {
            std::vector<int> next;
            for (int j = 0; j < rp.r(); ++j)
                next.insert(next.end(), ord.order[j].begin(), ord.order[j].begin() + P);
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            if (!pool.empty() && count_subsets(static_cast<int>(next.size()), max_size()) >
                                     static_cast<double>(params.pool_cap))
                break;
            pool = std::move(next);
        }
        tuples = enumerate_tuples(rp, ord, stats.lambda, pool);
        std::stable_sort(tuples.begin(), tuples.end(),
                         [](const ValidTuple& a, const ValidTuple& b) { return a.score > b.score; });
    }
    for (const auto& t : tuples) (t.small ? stats.small_tuples : stats.lambda_tuples) += 1;

    std::vector<char> best;
    double best_p = -kInf;
    auto take = [&](const std::vector<char>& x) {
        CandidateRecord rec;
        rec.indices = rp.to_global(x);
        rec.objective = rp.objective_p(x);
        rec.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
        if (rec.objective > best_p) {
            best_p = rec.objective;
            best = x;
        }
        result.trace.push_back(std::move(rec));
    };

    if (!budget_mode) {
        std::vector<TupleRun> runs(tuples.size());
        parallel_for(tuples.size(), [&](std::size_t a) {
            run_tuple(rp, tuples[a], stats.lambda_prime, params, false, std::numeric_limits<long>::max(), runs[a]);
        });
        for (const auto& run : runs) {
            merge_stats(stats, run.stats);
            for (const auto& x : run.candidates) take(x);
        }
    } else {
        for (const auto& t : tuples) {
            const long left = budget - static_cast<long>(result.trace.size());
            if (left <= 0) break;
            TupleRun run;
            run_tuple(rp, t, stats.lambda_prime, params, true, std::min<long>(left, params.max_aux_per_tuple), run);
            merge_stats(stats, run.stats);
            for (const auto& x : run.candidates) take(x);
        }
    }
    if (best.empty()) throw NumericalError("ranking produced no candidate");
    result.selection.indices = rp.to_global(best);
    result.selection.objective = best_p;
    result.objective_p_prime = rp.objective_p_prime(best);
    return result;
}

}  // namespace attnopt

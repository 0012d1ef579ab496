// SPDX-License-Identifier: MIT
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

using attnopt::RewardKind;

std::uint64_t splitmix64_ref(std::uint64_t state) {
    std::uint64_t z = state + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double reward(const RewardFunction& f, double x) {
    const auto& p = f.params;
    switch (f.kind) {
        case RewardKind::Logistic:
            return 1.0 / (1.0 + std::exp(-p[0] * (x - p[1])));
        case RewardKind::Relu:
            return x > 0.0 ? p[0] * x : 0.0;
        case RewardKind::LeakyRelu:
            return x > 0.0 ? p[1] * x : p[1] * p[0] * x;
        case RewardKind::Softplus:
            return std::log1p(std::exp(p[0] * x)) / p[0];
        case RewardKind::TanhShifted:
            return 1.0 + std::tanh(p[0] * (x - p[1]));
        case RewardKind::PiecewiseLinear: {
            const std::size_t pts = p.size() / 2;
            std::size_t seg = 0;
            while (seg + 2 < pts && x > p[2 * (seg + 1)]) ++seg;
            const double x0 = p[2 * seg], y0 = p[2 * seg + 1], x1 = p[2 * seg + 2], y1 = p[2 * seg + 3];
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
        case RewardKind::Exponential:
            return std::exp(p[0] * x);
    }
    return 0.0;
}

double objective_set(const Instance& inst, const std::vector<int>& S) {
    double total = 0.0;
    for (int i : S) {
        double num = 0.0, den = 0.0;
        for (int j : S) {
            double logit = 0.0;
            for (int c = 0; c < inst.Q.cols(); ++c) logit += inst.Q(i, c) * inst.K(j, c);
            double vu = 0.0;
            for (int c = 0; c < inst.V.cols(); ++c) vu += inst.V(j, c) * inst.u(c);
            const double w = std::exp(logit);
            num += w * vu;
            den += w;
        }
        total += reward(inst.rewards[inst.reward_of_item[i]], num / den);
    }
    return total;
}

double objective_x(const Instance& inst, const std::vector<char>& x) {
    const int n = inst.n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!x[i]) continue;
        std::vector<double> row(n);
        double rs = 0.0;
        for (int j = 0; j < n; ++j) {
            double logit = 0.0;
            for (int c = 0; c < inst.Q.cols(); ++c) logit += inst.Q(i, c) * inst.K(j, c);
            row[j] = std::exp(logit);
            rs += row[j];
        }
        double num = 0.0, den = 0.0;
        for (int j = 0; j < n; ++j) {
            if (!x[j]) continue;
            double vu = 0.0;
            for (int c = 0; c < inst.V.cols(); ++c) vu += inst.V(j, c) * inst.u(c);
            num += row[j] / rs * vu;
            den += row[j] / rs;
        }
        total += reward(inst.rewards[inst.reward_of_item[i]], num / den);
    }
    return total;
}

std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) > k) continue;
        std::vector<int> s;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) s.push_back(i);
        out.push_back(std::move(s));
    }
    return out;
}

Best brute(int n, int k, const std::function<double(const std::vector<int>&)>& f) {
    Best best;
    for (int size = 1; size <= std::min(n, k); ++size) {
        std::vector<int> c(size);
        for (int a = 0; a < size; ++a) c[a] = a;
        while (true) {
            const double v = f(c);
            if (v > best.value || (v == best.value && c < best.set)) {
                best.value = v;
                best.set = c;
            }
            int a = size - 1;
            while (a >= 0 && c[a] == n - size + a) --a;
            if (a < 0) break;
            ++c[a];
            for (int b = a + 1; b < size; ++b) c[b] = c[b - 1] + 1;
        }
    }
    return best;
}

double diameter(const attnopt::Mat& X, const std::vector<int>& rows) {
    double best = 0.0;
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            double s = 0.0;
            for (int c = 0; c < X.cols(); ++c) {
                const double d = X(rows[a], c) - X(rows[b], c);
                s += d * d;
            }
            best = std::max(best, std::sqrt(s));
        }
    return best;
}

Instance random_instance(std::uint64_t seed, int n, int k, int d, double qk_scale, bool mixed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    Instance inst;
    inst.n = n;
    inst.k = k;
    inst.Q.resize(n, d);
    inst.K.resize(n, d);
    inst.V.resize(n, d);
    inst.u.resize(d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) {
            inst.Q(i, c) = qk_scale * N(gen);
            inst.K(i, c) = qk_scale * N(gen);
            inst.V(i, c) = N(gen);
        }
    for (int c = 0; c < d; ++c) inst.u(c) = N(gen);
    if (mixed) {
        inst.rewards = {RewardFunction::logistic(2.0, 0.1), RewardFunction::relu(1.5),
                        RewardFunction::softplus(2.0), RewardFunction::tanh_shifted(0.5, -0.2),
                        RewardFunction::leaky_relu(0.2, 1.0),
                        RewardFunction::piecewise_linear({-1.0, 0.0, 2.0}, {0.0, 0.5, 1.0})};
        if (static_cast<int>(inst.rewards.size()) > n) inst.rewards.resize(n);
    } else {
        inst.rewards = {RewardFunction::logistic()};
    }
    inst.reward_of_item.resize(n);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(inst.rewards.size()) - 1);
    for (int i = 0; i < n; ++i) inst.reward_of_item[i] = pick(gen);
    return inst;
}

std::vector<int> sorted_top(const Instance& inst, int size) {
    std::vector<std::pair<double, int>> s;
    for (int i = 0; i < inst.n; ++i) {
        double v = 0.0;
        for (int c = 0; c < inst.V.cols(); ++c) v += inst.V(i, c) * inst.u(c);
        s.push_back({-v, i});
    }
    std::sort(s.begin(), s.end());
    std::vector<int> out;
    for (int a = 0; a < size; ++a) out.push_back(s[a].second);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace oracle

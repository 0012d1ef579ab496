// SPDX-License-Identifier: MIT
#include "attnopt/attention.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace attnopt {

namespace {

void check_set(const Instance& inst, std::span<const int> S) {
    if (S.empty()) throw ValidationError("empty set");
    for (int i : S)
        if (i < 0 || i >= inst.n) throw ValidationError(fmt::format("item {} out of range", i));
}

void check_cardinality(const Instance& inst, std::size_t size) {
    if (size < 1 || static_cast<int>(size) > inst.k)
        throw ValidationError(fmt::format("set size {} outside [1, k = {}]", size, inst.k));
}

}  // namespace

Mat softmax_rows(const Mat& A) {
    Mat out(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double mx = A.row(i).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            out(i, j) = std::exp(A(i, j) - mx);
            z += out(i, j);
        }
        out.row(i) /= z;
    }
    return out;
}

Mat attention_matrix(const Instance& inst) {
    if (static_cast<std::size_t>(inst.n) > config().dense_attention_cap)
        throw ValidationError(fmt::format("n = {} exceeds the dense attention cap {}", inst.n,
                                          config().dense_attention_cap));
    return softmax_rows(inst.Q * inst.K.transpose());
}

Mat sa_layer(const Instance& inst, std::span<const int> S) {
    check_set(inst, S);
    const double scale = std::exp(inst.value_log_scale);
    Mat out(inst.n, inst.d_v());
    Vec mean = Vec::Zero(inst.d_v());
    for (int j : S) mean += inst.V.row(j).transpose();
    mean *= scale / static_cast<double>(S.size());
    std::vector<bool> in(inst.n, false);
    for (int j : S) in[j] = true;
    std::vector<double> logits(S.size());
    for (int i = 0; i < inst.n; ++i) {
        if (!in[i]) {
            out.row(i) = mean.transpose();
            continue;
        }
        double mx = -kInf;
        for (std::size_t a = 0; a < S.size(); ++a) {
            logits[a] = inst.Q.row(i).dot(inst.K.row(S[a]));
            mx = std::max(mx, logits[a]);
        }
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        const double lse = mx + std::log(z);
        Vec acc = Vec::Zero(inst.d_v());
        for (std::size_t a = 0; a < S.size(); ++a) {
            const double w = std::exp(logits[a] - lse + inst.value_log_scale);
            for (int c = 0; c < inst.d_v(); ++c) {
                const double v = inst.V(S[a], c);
                if (v != 0.0) acc(c) += w * v;
            }
        }
        out.row(i) = acc.transpose();
    }
    return out;
}

double sa_output(const Instance& inst, std::span<const int> S, int row) {
    check_set(inst, S);
    if (row < 0 || row >= inst.n) throw ValidationError("row out of range");
    const bool in = std::find(S.begin(), S.end(), row) != S.end();
    std::vector<double> logits(S.size());
    double mx = -kInf;
    for (std::size_t a = 0; a < S.size(); ++a) {
        logits[a] = in ? inst.Q.row(row).dot(inst.K.row(S[a])) : 0.0;
        mx = std::max(mx, logits[a]);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double lse = mx + std::log(z);
    double acc = 0.0;
    for (std::size_t a = 0; a < S.size(); ++a) {
        const double vu = inst.V.row(S[a]).dot(inst.u);
        if (vu == 0.0) continue;
        acc += std::exp(logits[a] - lse + inst.value_log_scale) * vu;
    }
    return inst.reward(row)(acc);
}

double objective_set(const Instance& inst, std::span<const int> S) {
    check_set(inst, S);
    check_cardinality(inst, S.size());
    const Mat sa = sa_layer(inst, S);
    double total = 0.0;
    for (int i : S) total += inst.reward(i)(sa.row(i).dot(inst.u));
    return total;
}

double objective_x(const Instance& inst, const Mat& W, std::span<const char> x) {
    return objective_x(inst, W, inst.values(), x);
}

double objective_x(const Instance& inst, const Mat& W, const Vec& vu, std::span<const char> x) {
    if (static_cast<int>(x.size()) != inst.n) throw ValidationError("indicator length differs from n");
    std::size_t count = 0;
    for (char c : x) count += c ? 1 : 0;
    check_cardinality(inst, count);
    double total = 0.0;
    for (int i = 0; i < inst.n; ++i) {
        if (!x[i]) continue;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < inst.n; ++j) {
            if (!x[j]) continue;
            num += W(i, j) * vu(j);
            den += W(i, j);
        }
        if (!(den > 0.0)) throw NumericalError("zero attention denominator");
        total += inst.reward(i)(num / den);
    }
    return total;
}

PoolObjective::PoolObjective(const Instance& inst, std::vector<int> items)
    : items_(std::move(items)), k_(inst.k) {
    if (items_.empty()) throw ValidationError("empty item pool");
    const int m = size();
    Mat logits(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) logits(a, b) = inst.Q.row(items_[a]).dot(inst.K.row(items_[b]));
    W_ = softmax_rows(logits);
    const Vec all = inst.values();
    vu_.resize(m);
    rewards_.resize(m);
    for (int a = 0; a < m; ++a) {
        vu_(a) = all(items_[a]);
        rewards_[a] = &inst.reward(items_[a]);
    }
}

double PoolObjective::value(std::span<const int> local) const {
    double total = 0.0;
    for (int i : local) {
        double num = 0.0, den = 0.0;
        for (int j : local) {
            num += W_(i, j) * vu_(j);
            den += W_(i, j);
        }
        total += (*rewards_[i])(num / den);
    }
    return total;
}

double PoolObjective::value_x(std::span<const char> x) const {
    const auto s = support(x);
    return value(s);
}

std::vector<int> PoolObjective::to_global(std::span<const int> local) const {
    std::vector<int> out;
    out.reserve(local.size());
    for (int i : local) out.push_back(items_[i]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace attnopt

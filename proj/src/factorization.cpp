// SPDX-License-Identifier: MIT
#include "attnopt/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace attnopt {

double NonnegFactorization::w_min() const { return product().minCoeff(); }

Mat attention_block(const Instance& inst, const std::vector<int>& items) {
    const int m = static_cast<int>(items.size());
    Mat L(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) L(a, b) = inst.Q.row(items[a]).dot(inst.K.row(items[b]));
    for (int a = 0; a < m; ++a) {
        const double mx = L.row(a).maxCoeff();
        for (int b = 0; b < m; ++b) L(a, b) = std::exp(L(a, b) - mx);
    }
    return L;
}

double ratio_deviation(const Mat& W, const Mat& Wp) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index j = 0; j < W.cols(); ++j) {
            const double r = W(i, j) / Wp(i, j);
            dev = std::max(dev, std::max(r, 1.0 / r) - 1.0);
        }
    return dev;
}

NonnegFactorization build_w_prime(const Instance& inst, const std::vector<int>& I,
                                  const CoverPartition& part) {
    if (I.empty()) throw ValidationError("empty candidate set");
    NonnegFactorization f;
    f.items = I;
    std::sort(f.items.begin(), f.items.end());
    const int m = f.m();

    std::vector<int> q_rep(part.q_clusters(), -1), k_rep(part.k_clusters(), -1);
    for (int i = 0; i < inst.n; ++i) {
        if (q_rep[part.q_cluster[i]] < 0) q_rep[part.q_cluster[i]] = i;
        if (k_rep[part.k_cluster[i]] < 0) k_rep[part.k_cluster[i]] = i;
    }
    std::map<int, int> q_local, k_local;
    f.q_group.resize(m);
    f.k_group.resize(m);
    for (int a = 0; a < m; ++a) {
        const int i = f.items[a];
        f.q_group[a] = part.q_cluster[i];
        f.k_group[a] = part.k_cluster[i];
        q_local.emplace(part.q_cluster[i], 0);
        k_local.emplace(part.k_cluster[i], 0);
    }
    int next = 0;
    for (auto& [c, idx] : q_local) idx = next++;
    next = 0;
    for (auto& [c, idx] : k_local) idx = next++;

    auto approx_logit = [&](int qc, int kc) { return inst.Q.row(q_rep[qc]).dot(inst.K.row(k_rep[kc])); };
    std::vector<double> shift(m);
    for (int a = 0; a < m; ++a) {
        double mx = -kInf;
        for (int b = 0; b < m; ++b) mx = std::max(mx, inst.Q.row(f.items[a]).dot(inst.K.row(f.items[b])));
        shift[a] = mx;
    }

    f.by_key = k_local.size() <= q_local.size();
    if (f.by_key) {
        const int r = static_cast<int>(k_local.size());
        f.A = Mat::Zero(m, r);
        f.B = Mat::Zero(m, r);
        for (int a = 0; a < m; ++a) {
            for (const auto& [kc, col] : k_local) f.A(a, col) = std::exp(approx_logit(f.q_group[a], kc) - shift[a]);
            f.B(a, k_local[f.k_group[a]]) = 1.0;
        }
    } else {
        const int r = static_cast<int>(q_local.size());
        f.A = Mat::Zero(m, r);
        f.B = Mat::Zero(m, r);
        for (const auto& [qc, col] : q_local) {
            double mx = -kInf;
            for (const auto& [kc, unused] : k_local) mx = std::max(mx, approx_logit(qc, kc));
            for (int b = 0; b < m; ++b) f.B(b, col) = std::exp(approx_logit(qc, f.k_group[b]) - mx);
            for (int a = 0; a < m; ++a)
                if (f.q_group[a] == qc) f.A(a, col) = std::exp(mx - shift[a]);
        }
    }
    f.gamma = ratio_deviation(attention_block(inst, f.items), f.product());
    f.gamma_bound = std::isfinite(part.delta) ? std::expm1(2.0 * part.delta * part.phi) : 0.0;
    if (!f.A.allFinite() || !f.B.allFinite()) throw NumericalError("factorization overflow");
    return f;
}

NonnegFactorization rescale_factorization(const NonnegFactorization& f) {
    NonnegFactorization out = f;
    for (Eigen::Index j = 0; j < f.B.cols(); ++j) {
        const double s = f.B.col(j).sum();
        if (!(s > 0.0)) throw ValidationError("factorization has an all-zero column");
        out.B.col(j) /= s;
        out.A.col(j) *= s;
    }
    return out;
}

RowRescaled rescale_rows_on_I(const Mat& W_block, const NonnegFactorization& f) {
    RowRescaled out{W_block, f};
    for (Eigen::Index i = 0; i < W_block.rows(); ++i) {
        const double s = W_block.row(i).sum();
        out.W_I.row(i) /= s;
        out.f.A.row(i) /= s;
    }
    return out;
}

}  // namespace attnopt

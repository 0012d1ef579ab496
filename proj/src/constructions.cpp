// SPDX-License-Identifier: MIT
#include "attnopt/constructions.hpp"

#include "attnopt/attention.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace attnopt {

void VarietyModel::validate() const {
    if (n < 1 || k < 1) throw ValidationError("variety model: n and k must be positive");
    if (u_hat.size() != n || x.rows() != n || x.cols() < 1)
        throw ValidationError("variety model: dimension mismatch");
    if (static_cast<int>(lambda.size()) != k - 1)
        throw ValidationError("variety model: need k - 1 lag weights");
    for (int i = 0; i < n; ++i) {
        if (!(u_hat(i) > 0.0)) throw ValidationError("variety model: base utilities must be positive");
        if (std::abs(x.row(i).norm() - 1.0) > 1e-9)
            throw ValidationError(fmt::format("variety model: embedding {} is not unit norm", i));
    }
    for (double l : lambda)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("variety model: bad lag weight");
    if (!std::isfinite(beta) || !x.allFinite()) throw ValidationError("variety model: non-finite entry");
}

void HaloModel::validate() const {
    if (n < 1) throw ValidationError("halo model: n must be positive");
    if (v_hat.rows() != n || u_hat.size() != v_hat.cols() || H.rows() != n || H.cols() != n)
        throw ValidationError("halo model: dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (H(i, i) != 0.0) throw ValidationError("halo model: H must have a zero diagonal");
    if (!v_hat.allFinite() || !u_hat.allFinite() || !H.allFinite())
        throw ValidationError("halo model: non-finite entry");
}

double variety_utility_direct(const VarietyModel& m, std::span<const int> seq, int pos) {
    if (pos < 0 || pos >= static_cast<int>(seq.size()) || pos >= m.k)
        throw ValidationError("position out of range");
    const int it = seq[pos];
    double s = 0.0;
    for (int l = 1; l <= pos; ++l) s += m.lambda[l - 1] * m.x.row(it).dot(m.x.row(seq[pos - l]));
    return m.u_hat(it) * std::exp(m.beta * s);
}

double halo_utility_direct(const HaloModel& m, std::span<const int> S, int i) {
    if (std::find(S.begin(), S.end(), i) == S.end()) throw ValidationError("item not in set");
    double g = m.v_hat.row(i).dot(m.u_hat);
    for (int j : S) g += m.H(i, j);
    return g;
}

int BuiltTransformer::row_position(int item, int pos) const { return pos * n + item; }
int BuiltTransformer::row_component(int item, int pos, int comp) const {
    return n * k + (pos * n + item) * d + comp;
}
int BuiltTransformer::row_dummy() const { return n * k + n * k * d; }
int BuiltTransformer::row_base(int item, int pos) const { return row_dummy() + 1 + pos * n + item; }

std::vector<int> BuiltTransformer::lift(int head, std::span<const int> S) const {
    std::vector<int> out;
    if (kind == ConstructionKind::Variety) {
        if (static_cast<int>(S.size()) != k) throw ValidationError("sequence length must equal k");
        for (int t = 0; t < k; ++t) {
            out.push_back(row_position(S[t], t));
            for (int a = 0; a < d; ++a) out.push_back(row_component(S[t], t, a));
            out.push_back(row_base(S[t], t));
        }
        out.push_back(row_dummy());
    } else {
        out.assign(S.begin(), S.end());
        if (head < 2) out.push_back(n);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double BuiltTransformer::evaluate_head(int head, std::span<const int> S, int where) const {
    const auto lifted = lift(head, S);
    const int row = kind == ConstructionKind::Variety ? row_position(S[where], where) : where;
    return sa_output(heads[head], lifted, row);
}

double BuiltTransformer::evaluate(std::span<const int> S, int where) const {
    double total = 0.0;
    for (int h = 0; h < static_cast<int>(heads.size()); ++h) total += evaluate_head(h, S, where);
    return total;
}

double variety_precision_bound(const VarietyModel& m, double M) {
    double Lambda = 0.0;
    for (double l : m.lambda) Lambda += l;
    const double k = m.k, rd = std::sqrt(static_cast<double>(m.d()));
    const double log_u = m.u_hat.array().log().abs().maxCoeff();
    const double leak = std::abs(m.beta) * k * std::exp(-M);
    const double num = std::abs(m.beta) * (Lambda + k * std::exp(-M)) + log_u;
    const double Z = (Lambda + k * std::exp(-M)) * rd + 2.0 * k;
    const double delta = leak + std::exp(-M * M * M) * ((k - 1.0) * log_u + num * Z);
    return std::expm1(delta);
}

BuiltTransformer build_variety_transformer(const VarietyModel& m, double M,
                                           std::optional<double> tolerance) {
    m.validate();
    if (!(M > 0.0)) throw ValidationError("M must be positive");
    if ((m.x.array() <= 0.0).any())
        throw ValidationError("variety construction needs strictly positive embedding coordinates");
    if (tolerance && variety_precision_bound(m, M) > *tolerance)
        throw ValidationError(fmt::format("M = {} is below the bound for tolerance {}", M, *tolerance));

    BuiltTransformer bt;
    bt.kind = ConstructionKind::Variety;
    bt.M = M;
    bt.n = m.n;
    bt.k = m.k;
    bt.d = m.d();
    const int n = m.n, k = m.k, d = m.d();
    const int N = n * k + n * k * d + 1 + n * k;
    const int pos0 = 0, cmp0 = k, dummy = k + d, base0 = k + d + 1;
    const int dkq = 2 * k + d + 1;
    const double M3 = M * M * M;

    Instance inst;
    inst.n = N;
    inst.k = 2 * k + k * d + 1;
    inst.Q = Mat::Zero(N, dkq);
    inst.K = Mat::Zero(N, dkq);
    inst.V = Mat::Zero(N, 1);
    inst.u = Vec::Ones(1);
    inst.value_log_scale = M3;
    inst.rewards = {RewardFunction::exponential(1.0)};
    inst.reward_of_item.assign(N, 0);

    for (int t = 0; t < k; ++t) {
        for (int i = 0; i < n; ++i) {
            const int r = bt.row_position(i, t);
            for (int mm = 0; mm < k; ++mm) {
                if (mm < t) {
                    const double lam = m.lambda[t - mm - 1];
                    inst.Q(r, pos0 + mm) = lam > 0.0 ? std::log(lam) : -10.0 * M;
                } else {
                    inst.Q(r, pos0 + mm) = -M;
                }
            }
            for (int a = 0; a < d; ++a) inst.Q(r, cmp0 + a) = std::log(m.x(i, a));
            inst.Q(r, dummy) = M3;
            for (int tb = 0; tb < k; ++tb) inst.Q(r, base0 + tb) = tb == t ? 0.0 : -M3;
        }
    }
    for (int mm = 0; mm < k; ++mm)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < d; ++a) {
                const int r = bt.row_component(j, mm, a);
                inst.K(r, pos0 + mm) = 1.0;
                inst.K(r, cmp0 + a) = 1.0;
                inst.V(r, 0) = m.beta * m.x(j, a);
            }
    inst.K(bt.row_dummy(), dummy) = 1.0;
    for (int t = 0; t < k; ++t)
        for (int i = 0; i < n; ++i) {
            const int r = bt.row_base(i, t);
            inst.K(r, base0 + t) = 1.0;
            inst.V(r, 0) = std::log(m.u_hat(i));
        }
    inst.validate();
    bt.heads.push_back(std::move(inst));
    return bt;
}

namespace {

void decompose(const HaloModel& m, double shift, Mat& A, Mat& B) {
    A.resize(m.n, m.n);
    B.resize(m.n, m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            A(i, j) = std::log(std::max(m.H(i, j), 0.0) + shift);
            B(i, j) = std::log(std::max(-m.H(i, j), 0.0) + shift);
        }
}

Instance halo_interaction_head(const Mat& logits, double M, double value) {
    const int n = static_cast<int>(logits.rows());
    Instance inst;
    inst.n = n + 1;
    inst.k = n + 1;
    inst.Q = Mat::Zero(n + 1, n + 1);
    inst.Q.topLeftCorner(n, n) = logits;
    inst.Q.col(n).setConstant(M);
    inst.K = Mat::Identity(n + 1, n + 1);
    inst.V = Mat::Constant(n + 1, 1, value);
    inst.V(n, 0) = 0.0;
    inst.u = Vec::Ones(1);
    inst.rewards = {RewardFunction::linear(std::exp(M))};
    inst.reward_of_item.assign(n + 1, 0);
    return inst;
}

}  // namespace

double halo_precision_bound(const HaloModel& m, double M, double shift) {
    Mat A, B;
    decompose(m, shift, A, B);
    const double X = A.array().exp().rowwise().sum().maxCoeff();
    const double Y = B.array().exp().rowwise().sum().maxCoeff();
    const double base = (m.v_hat * m.u_hat).cwiseAbs().maxCoeff();
    return std::exp(-M) * (X * X + Y * Y + 2.0 * (m.n - 1) * base);
}

BuiltTransformer build_halo_transformer(const HaloModel& m, double M,
                                        std::optional<double> tolerance, double shift) {
    m.validate();
    if (!(M > 0.0)) throw ValidationError("M must be positive");
    if (!(shift > 1.0)) throw ValidationError("decomposition shift must exceed 1");
    if (tolerance && halo_precision_bound(m, M, shift) > *tolerance)
        throw ValidationError(fmt::format("M = {} is below the bound for tolerance {}", M, *tolerance));

    BuiltTransformer bt;
    bt.kind = ConstructionKind::Halo;
    bt.M = M;
    bt.n = m.n;
    bt.k = m.n;
    bt.d = static_cast<int>(m.v_hat.cols());
    bt.shift = shift;
    Mat A, B;
    decompose(m, shift, A, B);
    bt.heads.push_back(halo_interaction_head(A, M, 1.0));
    bt.heads.push_back(halo_interaction_head(B, M, -1.0));

    Instance base;
    base.n = m.n;
    base.k = m.n;
    base.Q = Mat::Constant(m.n, m.n, -M);
    base.Q.diagonal().setZero();
    base.K = Mat::Identity(m.n, m.n);
    base.V = m.v_hat;
    base.u = m.u_hat;
    base.rewards = {RewardFunction::linear(1.0)};
    base.reward_of_item.assign(m.n, 0);
    bt.heads.push_back(std::move(base));
    for (const auto& h : bt.heads) h.validate();
    return bt;
}

}  // namespace attnopt

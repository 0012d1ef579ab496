// SPDX-License-Identifier: MIT
#include "attnopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace attnopt {

Config& config() {
    static Config cfg;
    return cfg;
}

namespace {

struct KindName {
    RewardKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {RewardKind::Logistic, "logistic"},
    {RewardKind::Relu, "relu"},
    {RewardKind::LeakyRelu, "leaky-relu"},
    {RewardKind::Softplus, "softplus"},
    {RewardKind::TanhShifted, "tanh-shifted"},
    {RewardKind::PiecewiseLinear, "piecewise-linear"},
    {RewardKind::Exponential, "exponential"},
};

std::size_t expected_params(RewardKind kind) {
    switch (kind) {
        case RewardKind::Logistic: return 2;
        case RewardKind::Relu: return 1;
        case RewardKind::LeakyRelu: return 2;
        case RewardKind::Softplus: return 1;
        case RewardKind::TanhShifted: return 2;
        case RewardKind::Exponential: return 1;
        case RewardKind::PiecewiseLinear: return 0;
    }
    return 0;
}

double piecewise(const std::vector<double>& p, double x) {
    const std::size_t pts = p.size() / 2;
    auto X = [&](std::size_t i) { return p[2 * i]; };
    auto Y = [&](std::size_t i) { return p[2 * i + 1]; };
    if (pts == 1) return Y(0);
    std::size_t seg = 0;
    if (x >= X(pts - 1)) {
        seg = pts - 2;
    } else if (x > X(0)) {
        while (seg + 1 < pts - 1 && x >= X(seg + 1)) ++seg;
    }
    const double slope = (Y(seg + 1) - Y(seg)) / (X(seg + 1) - X(seg));
    return Y(seg) + slope * (x - X(seg));
}

}  // namespace

std::string_view to_string(RewardKind kind) {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.name;
    return "unknown";
}

RewardKind parse_reward_kind(std::string_view name) {
    for (const auto& kn : kKindNames)
        if (kn.name == name) return kn.kind;
    throw ParseError(fmt::format("unknown reward kind '{}'", name));
}

RewardFunction RewardFunction::logistic(double slope, double center) {
    return {RewardKind::Logistic, {slope, center}};
}
RewardFunction RewardFunction::relu(double slope) { return {RewardKind::Relu, {slope}}; }
RewardFunction RewardFunction::leaky_relu(double alpha, double slope) {
    return {RewardKind::LeakyRelu, {alpha, slope}};
}
RewardFunction RewardFunction::softplus(double beta) { return {RewardKind::Softplus, {beta}}; }
RewardFunction RewardFunction::tanh_shifted(double slope, double center) {
    return {RewardKind::TanhShifted, {slope, center}};
}
RewardFunction RewardFunction::piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("piecewise-linear: size mismatch");
    RewardFunction f{RewardKind::PiecewiseLinear, {}};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        f.params.push_back(xs[i]);
        f.params.push_back(ys[i]);
    }
    return f;
}
RewardFunction RewardFunction::linear(double slope) {
    return piecewise_linear({0.0, 1.0}, {0.0, slope});
}
RewardFunction RewardFunction::exponential(double rate) {
    return {RewardKind::Exponential, {rate}};
}

double RewardFunction::operator()(double x) const {
    const auto& p = params;
    switch (kind) {
        case RewardKind::Logistic: {
            const double z = p[0] * (x - p[1]);
            if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
            const double e = std::exp(z);
            return e / (1.0 + e);
        }
        case RewardKind::Relu: return p[0] * std::max(x, 0.0);
        case RewardKind::LeakyRelu: return p[1] * (x > 0 ? x : p[0] * x);
        case RewardKind::Softplus: {
            const double z = p[0] * x;
            return (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)))) / p[0];
        }
        case RewardKind::TanhShifted: return 1.0 + std::tanh(p[0] * (x - p[1]));
        case RewardKind::PiecewiseLinear: return piecewise(p, x);
        case RewardKind::Exponential: return std::exp(p[0] * x);
    }
    return 0.0;
}

double RewardFunction::lipschitz() const {
    const auto& p = params;
    switch (kind) {
        case RewardKind::Logistic: return p[0] / 4.0;
        case RewardKind::Relu: return p[0];
        case RewardKind::LeakyRelu: return p[1] * std::max(1.0, p[0]);
        case RewardKind::Softplus: return 1.0;
        case RewardKind::TanhShifted: return p[0];
        case RewardKind::PiecewiseLinear: {
            double L = 0.0;
            for (std::size_t i = 0; i + 3 < p.size(); i += 2)
                L = std::max(L, (p[i + 3] - p[i + 1]) / (p[i + 2] - p[i]));
            return L;
        }
        case RewardKind::Exponential: return p[0] == 0.0 ? 0.0 : kInf;
    }
    return kInf;
}

void RewardFunction::validate() const {
    const auto name = to_string(kind);
    for (double v : params)
        if (!std::isfinite(v)) throw ValidationError(fmt::format("{}: non-finite parameter", name));
    if (kind == RewardKind::PiecewiseLinear) {
        if (params.size() < 2 || params.size() % 2 != 0)
            throw ValidationError("piecewise-linear: need (x, y) pairs");
        for (std::size_t i = 2; i < params.size(); i += 2) {
            if (!(params[i] > params[i - 2]))
                throw ValidationError("piecewise-linear: breakpoints must increase");
            if (params[i + 1] < params[i - 1])
                throw ValidationError("piecewise-linear: values must not decrease");
        }
    } else {
        if (params.size() != expected_params(kind))
            throw ValidationError(fmt::format("{}: expected {} parameters, got {}", name,
                                              expected_params(kind), params.size()));
        switch (kind) {
            case RewardKind::Logistic:
            case RewardKind::TanhShifted:
            case RewardKind::Relu:
                if (params[0] < 0) throw ValidationError(fmt::format("{}: negative slope", name));
                break;
            case RewardKind::LeakyRelu:
                if (params[0] < 0 || params[1] < 0)
                    throw ValidationError("leaky-relu: alpha and slope must be non-negative");
                break;
            case RewardKind::Softplus:
                if (!(params[0] > 0)) throw ValidationError("softplus: beta must be positive");
                break;
            case RewardKind::Exponential:
                if (params[0] < 0) throw ValidationError("exponential: negative rate");
                break;
            default: break;
        }
    }
    double prev = (*this)(-50.0);
    for (int s = 1; s <= 200; ++s) {
        const double x = -50.0 + 0.5 * s;
        const double cur = (*this)(x);
        if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev)))
            throw ValidationError(fmt::format("{}: not monotone near x = {}", name, x));
        prev = cur;
    }
}

double reward_eval(const RewardFunction& f, double x) { return f(x); }

void Instance::validate() const {
    if (n < 1) throw ValidationError("n must be positive");
    if (k < 1 || k > n) throw ValidationError(fmt::format("k = {} outside [1, n = {}]", k, n));
    if (Q.rows() != n || K.rows() != n || V.rows() != n)
        throw ValidationError("Q, K, V must have n rows");
    if (Q.cols() != K.cols()) throw ValidationError("Q and K column counts differ");
    if (Q.cols() < 1 || V.cols() < 1) throw ValidationError("empty embedding dimension");
    if (u.size() != V.cols()) throw ValidationError("u length differs from V column count");
    if (rewards.empty() || static_cast<int>(rewards.size()) > n)
        throw ValidationError("reward table size outside [1, n]");
    if (static_cast<int>(reward_of_item.size()) != n)
        throw ValidationError("reward_of_item must have n entries");
    for (int r : reward_of_item)
        if (r < 0 || r >= tau()) throw ValidationError("reward id out of range");
    if (!Q.allFinite() || !K.allFinite() || !V.allFinite() || !u.allFinite())
        throw ValidationError("non-finite matrix entry");
    if (!std::isfinite(value_log_scale)) throw ValidationError("non-finite value_log_scale");
    for (const auto& f : rewards) f.validate();
}

Vec Instance::values() const {
    Vec vu = V * u;
    if (value_log_scale != 0.0) vu *= std::exp(value_log_scale);
    if (!vu.allFinite()) throw NumericalError("Vu is not finite under the value scale");
    return vu;
}

double Instance::phi() const {
    double q = 0.0, kk = 0.0;
    if (n > 0) {
        q = Q.rowwise().norm().maxCoeff();
        kk = K.rowwise().norm().maxCoeff();
    }
    return std::max(q, kk);
}

double Instance::vu_max() const { return values().maxCoeff(); }
double Instance::vu_min() const { return values().minCoeff(); }

double Instance::lipschitz() const {
    double L = 0.0;
    for (const auto& f : rewards) L = std::max(L, f.lipschitz());
    return L;
}

std::vector<char> indicator(int n, std::span<const int> indices) {
    std::vector<char> x(n, 0);
    for (int i : indices) x[i] = 1;
    return x;
}

std::vector<int> support(std::span<const char> x) {
    std::vector<int> s;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) s.push_back(static_cast<int>(i));
    return s;
}

}  // namespace attnopt

// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace attnopt {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Config {
    double tolerance = 1e-9;
    std::size_t dense_attention_cap = 4096;
};

// Process-wide knobs. Mutate only before starting concurrent work.
Config& config();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

enum class RewardKind {
    Logistic,
    Relu,
    LeakyRelu,
    Softplus,
    TanhShifted,
    PiecewiseLinear,
    Exponential,
};

std::string_view to_string(RewardKind kind);
RewardKind parse_reward_kind(std::string_view name);

/// Non-decreasing scalar reward.
///
/// Parameters per kind:
///   logistic         [slope, center]       1 / (1 + exp(-slope (x - center)))
///   relu             [slope]               slope * max(x, 0)
///   leaky-relu       [alpha, slope]        slope * (x > 0 ? x : alpha x)
///   softplus         [beta]                log(1 + exp(beta x)) / beta
///   tanh-shifted     [slope, center]       1 + tanh(slope (x - center))
///   piecewise-linear [x0, y0, x1, y1, ...] interpolation, end segments extended
///   exponential      [rate]                exp(rate x), not Lipschitz
struct RewardFunction {
    RewardKind kind = RewardKind::Logistic;
    std::vector<double> params;

    static RewardFunction logistic(double slope = 1.0, double center = 0.0);
    static RewardFunction relu(double slope = 1.0);
    static RewardFunction leaky_relu(double alpha = 0.1, double slope = 1.0);
    static RewardFunction softplus(double beta = 1.0);
    static RewardFunction tanh_shifted(double slope = 1.0, double center = 0.0);
    static RewardFunction piecewise_linear(std::vector<double> xs, std::vector<double> ys);
    static RewardFunction linear(double slope);
    static RewardFunction exponential(double rate = 1.0);

    double operator()(double x) const;
    double lipschitz() const;
    bool is_lipschitz() const { return kind != RewardKind::Exponential; }

    /// Throws ValidationError on malformed parameters or a sampled monotonicity failure.
    void validate() const;

    bool operator==(const RewardFunction&) const = default;
};

double reward_eval(const RewardFunction& f, double x);

struct Instance {
    int n = 0;
    int k = 0;
    Mat Q;
    Mat K;
    Mat V;
    Vec u;
    std::vector<RewardFunction> rewards;
    std::vector<int> reward_of_item;
    /// Effective value matrix is exp(value_log_scale) * V.
    double value_log_scale = 0.0;

    int d_kq() const { return static_cast<int>(Q.cols()); }
    int d_v() const { return static_cast<int>(V.cols()); }
    int tau() const { return static_cast<int>(rewards.size()); }
    const RewardFunction& reward(int i) const { return rewards[reward_of_item[i]]; }

    void validate() const;

    /// Vu including the value scale. Throws NumericalError if not finite.
    Vec values() const;
    double phi() const;
    double vu_max() const;
    double vu_min() const;
    /// Largest Lipschitz constant among rewards.
    double lipschitz() const;
};

struct Selection {
    std::vector<int> indices;
    double objective = 0.0;
};

/// One complete candidate produced by a ranking method.
struct CandidateRecord {
    std::vector<int> indices;  // global ids
    double objective = 0.0;
    double wall_us = 0.0;      // since the method started
};

/// Counter-based SplitMix64 stream: output j is a pure function of (seed, j).
class Rng {
public:
    static constexpr std::string_view algorithm = "splitmix64-counter";

    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    double uniform();
    double normal();
    int below(int bound);
    /// Independent stream derived from this seed and a label.
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(std::string_view text);

/// Binary indicator of a sorted index list.
std::vector<char> indicator(int n, std::span<const int> indices);
std::vector<int> support(std::span<const char> x);

}  // namespace attnopt

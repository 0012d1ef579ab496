// SPDX-License-Identifier: MIT
#pragma once

#include <string_view>
#include <vector>

namespace attnopt {

enum class RowSense { Le, Ge, Eq };

struct LpRow {
    std::vector<double> coeffs;
    RowSense sense = RowSense::Le;
    double rhs = 0.0;
};

/// Variables carry box bounds; lower == upper fixes a variable.
struct LpProblem {
    int num_vars = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<LpRow> rows;
    /// Maximized when non-empty; feasibility problem otherwise.
    std::vector<double> objective;

    explicit LpProblem(int n = 0) : num_vars(n), lower(n, 0.0), upper(n, 1.0) {}
    void fix(int var, double value) { lower[var] = upper[var] = value; }
    void add_row(std::vector<double> coeffs, RowSense sense, double rhs) {
        rows.push_back({std::move(coeffs), sense, rhs});
    }
};

enum class LpStatus { Feasible, Optimal, Infeasible, Unbounded, NumericalFailure };
enum class LpMode { Feasibility, Vertex };

std::string_view to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    std::vector<double> x;
    bool vertex = false;
    int fractional = 0;
    int pivots = 0;
    bool bland_engaged = false;

    bool ok() const { return status == LpStatus::Feasible || status == LpStatus::Optimal; }
};

/// Two-phase dense tableau simplex. Bounds become explicit rows, so every
/// returned point is a basic feasible solution; fractional coordinates never
/// exceed the number of non-bound rows. Dantzig pricing with a switch to Bland's
/// rule after a run of degenerate pivots.
LpSolution lp_solve(const LpProblem& p, LpMode mode = LpMode::Feasibility);

/// Coordinates strictly inside their box by more than tol.
int count_fractional(const LpProblem& p, const std::vector<double>& x, double tol = 1e-9);

/// Largest row or bound violation of x.
double max_violation(const LpProblem& p, const std::vector<double>& x);

}  // namespace attnopt

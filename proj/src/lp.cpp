// SPDX-License-Identifier: MIT
#include "attnopt/lp.hpp"

#include "attnopt/core.hpp"

#include <algorithm>
#include <cmath>

namespace attnopt {

std::string_view to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Feasible: return "feasible";
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr int kDegenerateRun = 50;

struct Tableau {
    int rows = 0;
    int cols = 0;  // excluding rhs
    std::vector<double> a;
    std::vector<int> basis;
    std::vector<bool> artificial;
    int pivots = 0;
    bool bland = false;

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double& rhs(int r) { return at(r, cols); }

    void pivot(int pr, int pc) {
        const double inv = 1.0 / at(pr, pc);
        for (int c = 0; c <= cols; ++c) at(pr, c) *= inv;
        at(pr, pc) = 1.0;
        for (int r = 0; r < rows; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        basis[pr] = pc;
        ++pivots;
    }

    enum class Result { Optimal, Unbounded, Stalled };

    // Minimizes cost^T x over the current basis; columns with allowed[c] == false never enter.
    Result minimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
        const int cap = 50 * (rows + cols) + 1000;
        int degenerate = 0;
        std::vector<double> reduced(cols);
        for (int iter = 0; iter < cap; ++iter) {
            for (int c = 0; c < cols; ++c) {
                double z = cost[c];
                for (int r = 0; r < rows; ++r) z -= cost[basis[r]] * at(r, c);
                reduced[c] = z;
            }
            int enter = -1;
            double most = -kPivotTol;
            for (int c = 0; c < cols; ++c) {
                if (!allowed[c] || reduced[c] >= -kPivotTol) continue;
                if (bland) {
                    enter = c;
                    break;
                }
                if (reduced[c] < most) {
                    most = reduced[c];
                    enter = c;
                }
            }
            if (enter < 0) return Result::Optimal;
            int leave = -1;
            double best = kInf;
            for (int r = 0; r < rows; ++r) {
                const double coef = at(r, enter);
                if (coef <= kPivotTol) continue;
                const double ratio = std::max(at(r, cols), 0.0) / coef;
                if (leave < 0 || ratio < best - 1e-12) {
                    best = ratio;
                    leave = r;
                } else if (ratio <= best + 1e-12 && basis[r] < basis[leave]) {
                    best = std::min(best, ratio);
                    leave = r;
                }
            }
            if (leave < 0) return Result::Unbounded;
            degenerate = best <= 1e-12 ? degenerate + 1 : 0;
            if (degenerate > kDegenerateRun) bland = true;
            pivot(leave, enter);
        }
        return Result::Stalled;
    }
};

}  // namespace

int count_fractional(const LpProblem& p, const std::vector<double>& x, double tol) {
    int count = 0;
    for (int v = 0; v < p.num_vars; ++v)
        if (x[v] - p.lower[v] > tol && p.upper[v] - x[v] > tol) ++count;
    return count;
}

double max_violation(const LpProblem& p, const std::vector<double>& x) {
    double worst = 0.0;
    for (int v = 0; v < p.num_vars; ++v) {
        worst = std::max(worst, p.lower[v] - x[v]);
        worst = std::max(worst, x[v] - p.upper[v]);
    }
    for (const auto& row : p.rows) {
        double lhs = 0.0;
        for (int v = 0; v < p.num_vars; ++v) lhs += row.coeffs[v] * x[v];
        const double scale = std::max(1.0, std::abs(row.rhs));
        double viol = 0.0;
        if (row.sense != RowSense::Ge) viol = std::max(viol, lhs - row.rhs);
        if (row.sense != RowSense::Le) viol = std::max(viol, row.rhs - lhs);
        worst = std::max(worst, viol / scale);
    }
    return worst;
}

LpSolution lp_solve(const LpProblem& p, LpMode mode) {
    LpSolution sol;
    const int n = p.num_vars;
    if (static_cast<int>(p.lower.size()) != n || static_cast<int>(p.upper.size()) != n)
        throw ValidationError("LP: bound vectors have the wrong length");
    if (!p.objective.empty() && static_cast<int>(p.objective.size()) != n)
        throw ValidationError("LP: objective has the wrong length");
    for (const auto& row : p.rows) {
        if (static_cast<int>(row.coeffs.size()) != n) throw ValidationError("LP: row has the wrong length");
        for (double c : row.coeffs)
            if (!std::isfinite(c)) throw ValidationError("LP: non-finite coefficient");
        if (!std::isfinite(row.rhs)) throw ValidationError("LP: non-finite right-hand side");
    }
    for (int v = 0; v < n; ++v) {
        if (!std::isfinite(p.lower[v])) throw ValidationError("LP: lower bounds must be finite");
        if (p.upper[v] < p.lower[v] - 1e-12) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
    }

    std::vector<int> free_vars;
    for (int v = 0; v < n; ++v)
        if (p.upper[v] - p.lower[v] > 1e-12) free_vars.push_back(v);
    const int nf = static_cast<int>(free_vars.size());

    struct StdRow {
        std::vector<double> coeffs;
        RowSense sense;
        double rhs;
    };
    std::vector<StdRow> rows;
    for (const auto& row : p.rows) {
        double rhs = row.rhs;
        for (int v = 0; v < n; ++v) rhs -= row.coeffs[v] * p.lower[v];
        std::vector<double> c(nf);
        bool any = false;
        for (int f = 0; f < nf; ++f) {
            c[f] = row.coeffs[free_vars[f]];
            any = any || c[f] != 0.0;
        }
        if (!any) {
            const double tol = kFeasTol * std::max(1.0, std::abs(row.rhs));
            const bool ok = (row.sense == RowSense::Le && rhs >= -tol) ||
                            (row.sense == RowSense::Ge && rhs <= tol) ||
                            (row.sense == RowSense::Eq && std::abs(rhs) <= tol);
            if (!ok) {
                sol.status = LpStatus::Infeasible;
                return sol;
            }
            continue;
        }
        rows.push_back({std::move(c), row.sense, rhs});
    }
    for (int f = 0; f < nf; ++f) {
        const int v = free_vars[f];
        if (!std::isfinite(p.upper[v])) continue;
        std::vector<double> c(nf, 0.0);
        c[f] = 1.0;
        rows.push_back({std::move(c), RowSense::Le, p.upper[v] - p.lower[v]});
    }
    for (auto& r : rows) {
        if (r.rhs < 0) {
            for (double& c : r.coeffs) c = -c;
            r.rhs = -r.rhs;
            if (r.sense == RowSense::Le) r.sense = RowSense::Ge;
            else if (r.sense == RowSense::Ge) r.sense = RowSense::Le;
        }
    }

    const int R = static_cast<int>(rows.size());
    int extra = 0;
    for (const auto& r : rows) extra += r.sense == RowSense::Le ? 1 : (r.sense == RowSense::Ge ? 2 : 1);
    Tableau t;
    t.rows = R;
    t.cols = nf + extra;
    t.a.assign(static_cast<std::size_t>(R) * (t.cols + 1), 0.0);
    t.basis.assign(R, -1);
    t.artificial.assign(t.cols, false);
    int col = nf;
    for (int r = 0; r < R; ++r) {
        for (int f = 0; f < nf; ++f) t.at(r, f) = rows[r].coeffs[f];
        t.rhs(r) = rows[r].rhs;
        switch (rows[r].sense) {
            case RowSense::Le:
                t.at(r, col) = 1.0;
                t.basis[r] = col++;
                break;
            case RowSense::Ge:
                t.at(r, col++) = -1.0;
                t.at(r, col) = 1.0;
                t.artificial[col] = true;
                t.basis[r] = col++;
                break;
            case RowSense::Eq:
                t.at(r, col) = 1.0;
                t.artificial[col] = true;
                t.basis[r] = col++;
                break;
        }
    }

    std::vector<bool> allowed(t.cols, true);
    std::vector<double> cost(t.cols, 0.0);
    bool has_artificial = false;
    for (int c = 0; c < t.cols; ++c)
        if (t.artificial[c]) {
            cost[c] = 1.0;
            has_artificial = true;
        }
    auto fail = [&](LpStatus s) {
        sol.status = s;
        sol.pivots = t.pivots;
        sol.bland_engaged = t.bland;
        return sol;
    };
    if (has_artificial) {
        if (t.minimize(cost, allowed) == Tableau::Result::Stalled) return fail(LpStatus::NumericalFailure);
        double infeas = 0.0, scale = 1.0;
        for (int r = 0; r < R; ++r) {
            if (t.artificial[t.basis[r]]) infeas += std::max(t.rhs(r), 0.0);
            scale = std::max(scale, rows[r].rhs);
        }
        if (infeas > 1e-9 * scale) return fail(LpStatus::Infeasible);
        for (int r = 0; r < R; ++r) {
            if (!t.artificial[t.basis[r]]) continue;
            for (int c = 0; c < t.cols; ++c)
                if (!t.artificial[c] && std::abs(t.at(r, c)) > kPivotTol) {
                    t.pivot(r, c);
                    break;
                }
        }
        for (int c = 0; c < t.cols; ++c)
            if (t.artificial[c]) allowed[c] = false;
    }
    bool optimal = false;
    if (!p.objective.empty()) {
        std::fill(cost.begin(), cost.end(), 0.0);
        for (int f = 0; f < nf; ++f) cost[f] = -p.objective[free_vars[f]];
        const auto res = t.minimize(cost, allowed);
        if (res == Tableau::Result::Stalled) return fail(LpStatus::NumericalFailure);
        if (res == Tableau::Result::Unbounded) return fail(LpStatus::Unbounded);
        optimal = true;
    }

    std::vector<double> y(nf, 0.0);
    for (int r = 0; r < R; ++r)
        if (t.basis[r] < nf) y[t.basis[r]] = t.rhs(r);
    sol.x = p.lower;
    for (int f = 0; f < nf; ++f) {
        const int v = free_vars[f];
        double xv = p.lower[v] + y[f];
        if (std::abs(xv - p.lower[v]) <= 1e-10) xv = p.lower[v];
        if (std::abs(xv - p.upper[v]) <= 1e-10) xv = p.upper[v];
        sol.x[v] = xv;
    }
    sol.pivots = t.pivots;
    sol.bland_engaged = t.bland;
    if (max_violation(p, sol.x) > kFeasTol) {
        sol.status = LpStatus::NumericalFailure;
        return sol;
    }
    sol.vertex = true;
    sol.fractional = count_fractional(p, sol.x);
    sol.status = optimal ? LpStatus::Optimal : LpStatus::Feasible;
    if (mode == LpMode::Vertex && sol.fractional > static_cast<int>(p.rows.size()))
        sol.status = LpStatus::NumericalFailure;
    return sol;
}

}  // namespace attnopt

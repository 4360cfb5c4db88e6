#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "posidwell/errors.hpp"

namespace posidwell {

enum class Relation { LessEq, Eq };

struct LpVariable {
    std::string name;
    double lo;  // may be -infinity
    double hi;  // may be +infinity
};

/// Dense constraint row. coeffs.size() must equal the variable count.
struct LpConstraint {
    std::vector<double> coeffs;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
};

/// Linear program in the form: maximize objective . x subject to the
/// constraint rows and variable bounds.
struct LpProblem {
    std::vector<LpVariable> variables;
    std::vector<LpConstraint> constraints;
    std::vector<double> objective;  // empty means the zero objective

    /// When finite, the solver may stop as soon as it holds a feasible basic
    /// solution whose objective reaches this value; the result then has
    /// status GoalReached and carries no row duals. Feasibility-style
    /// programs use this to skip the degenerate endgame of the climb.
    double stop_objective = std::numeric_limits<double>::infinity();

    int add_variable(std::string name, double lo, double hi);
    void add_constraint(std::vector<double> coeffs, Relation rel, double rhs);

    /// Adds a row given as sparse (variable index, coefficient) terms.
    void add_row(const std::vector<std::pair<int, double>>& terms, Relation rel, double rhs);

    void validate() const;
};

enum class LpStatus { Optimal, GoalReached, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values;     // per original variable
    double objective = 0.0;
    std::vector<double> row_duals;  // per constraint row; >= 0 for binding LessEq rows
    int iterations = 0;
};

/// Solves the program with a dense two-phase simplex. Deterministic for a
/// fixed input. Throws solver_error when the pivot count exceeds the
/// iteration cap.
LpSolution solve(const LpProblem& p);

/// Largest constraint or bound violation of the point x, with each row
/// scaled by max(1, largest absolute coefficient). Nonnegative.
double max_violation(const LpProblem& p, const std::vector<double>& x);

/// When non-null, every solve() call writes the problem to this stream in a
/// plain-text tabular format before solving.
void set_dump_sink(std::ostream* sink);

struct FeasibilityResult {
    bool feasible = false;
    double margin = 0.0;
    std::vector<double> witness;  // all builder variables, margin first
    LpStatus status = LpStatus::Infeasible;
    int rows = 0;
    int cols = 0;
    double seconds = 0.0;
};

/// Builds feasibility programs for homogeneous systems of strict and
/// non-strict linear inequalities. A margin variable t pinned to 1
/// normalizes the cone: every strict row "sum <= 0, strictly" becomes
/// "sum + scale * t <= 0" with scale equal to the row's largest absolute
/// coefficient, and positivity requirements become "t - x <= 0". By
/// homogeneity the original system is strictly feasible exactly when the
/// normalized program is feasible; the reported margin is a scale-invariant
/// slack of the found witness, in (0, 1].
class FeasibilityBuilder {
public:
    FeasibilityBuilder();

    /// Index of the margin variable (always 0).
    int margin_var() const { return 0; }

    int add_variable(const std::string& name);
    int add_variable(const std::string& name, double lo, double hi);

    /// Requires x_var >= t.
    void require_positive(int var);

    /// Adds "sum of terms < 0" as "sum + scale * t <= 0".
    void add_strict(const std::vector<std::pair<int, double>>& terms);

    void add_leq(const std::vector<std::pair<int, double>>& terms, double rhs);
    void add_eq(const std::vector<std::pair<int, double>>& terms, double rhs);

    int rows() const { return static_cast<int>(problem_.constraints.size()); }
    int cols() const { return static_cast<int>(problem_.variables.size()); }
    const LpProblem& problem() const { return problem_; }

    FeasibilityResult solve_max_margin();

private:
    double witness_margin(const std::vector<double>& x) const;

    LpProblem problem_;
};

/// Witness margins at or below this are reported as poorly conditioned
/// certificates; feasibility itself is the solver's verdict.
inline constexpr double kFeasibleMargin = 1e-7;

} // namespace posidwell

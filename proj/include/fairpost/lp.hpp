#pragma once

#include <limits>
#include <string>
#include <vector>

namespace fairpost {

inline constexpr double kLpInfinity = std::numeric_limits<double>::infinity();

// A linear program in equality form:
//
//   minimize    c . x
//   subject to  A x = b,   lower <= x <= upper
//
// Rows are stored sparsely.  Callers model inequalities by adding explicit
// slack variables.  Lower bounds default to 0 and may be -inf; upper bounds
// default to +inf.
struct LinearProgram {
  struct Entry {
    int col = 0;
    double value = 0.0;
  };

  int num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<Entry>> rows;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  int num_rows() const { return static_cast<int>(rows.size()); }

  // Appends a variable and returns its index.
  int add_var(double cost, double lo = 0.0, double hi = kLpInfinity);
  // Appends an equality row from (col, coefficient) pairs.
  void add_row(std::vector<Entry> entries, double b);
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  // Row duals and the Lagrangian bound they certify; at optimality the bound
  // matches objective_value up to roundoff.
  std::vector<double> duals;
  double dual_objective = 0.0;
  double max_residual = 0.0;
  long iterations = 0;
};

// Deterministic two-phase revised simplex for bounded variables.  Dantzig
// pricing with a Bland's-rule fallback when the objective stalls, so the
// method cannot cycle.  Optimal solutions are basic.  Throws SolverError if
// the iteration budget is exhausted and InvalidInputError for malformed
// programs; infeasible and unbounded programs are reported via status.
LpSolution solve_lp(const LinearProgram& program);

}  // namespace fairpost

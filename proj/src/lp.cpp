#include "fairpost/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairpost/errors.hpp"

namespace fairpost {

namespace {

constexpr double kRcTol = 1e-9;     // reduced-cost eligibility threshold
constexpr double kPivotTol = 1e-9;  // smallest magnitude accepted as a pivot
constexpr double kZeroTol = 1e-10;  // zero test for degenerate steps

enum class VarState { kBasic, kAtLower, kAtUpper, kFree };

// Sparse column entry; `row` indexes the constraint matrix row.
struct ColEntry {
  int row;
  double value;
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& program);
  LpSolution solve();

 private:
  // Dimensions: m_ rows, n_ structural variables, total_ = n_ + m_ columns
  // (structurals followed by one artificial per row).
  int m_;
  int n_;
  int total_;

  std::vector<std::vector<ColEntry>> cols_;
  std::vector<double> cost_;  // phase-2 objective (0 for artificials)
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> rhs_;

  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;         // variable index occupying each row
  std::vector<double> binv_;       // dense m_ x m_ basis inverse, row-major
  std::vector<double> work_cost_;  // objective of the current phase

  long iterations_ = 0;
  long iteration_limit_ = 0;
  double b_scale_ = 1.0;

  double& binv(int r, int c) { return binv_[static_cast<std::size_t>(r) * m_ + c]; }
  double binv_at(int r, int c) const { return binv_[static_cast<std::size_t>(r) * m_ + c]; }

  bool is_fixed(int j) const { return lower_[j] == upper_[j]; }
  double nonbasic_value(int j) const;
  void set_initial_point();
  void refactorize();
  void recompute_basics();
  std::vector<double> compute_duals() const;
  double reduced_cost(int j, const std::vector<double>& y) const;
  std::vector<double> ftran(int j) const;  // B^{-1} A_j
  double phase_objective() const;
  void apply_pivot(int leave_row, int entering, const std::vector<double>& d);

  // Runs the simplex loop on work_cost_.  Returns false when the problem is
  // unbounded in the current phase.
  bool iterate(bool phase_one);
  void drive_out_artificials();
};

SimplexSolver::SimplexSolver(const LinearProgram& p) {
  m_ = p.num_rows();
  n_ = p.num_vars;
  total_ = n_ + m_;
  if (static_cast<int>(p.objective.size()) != n_ || static_cast<int>(p.lower.size()) != n_ ||
      static_cast<int>(p.upper.size()) != n_ || static_cast<int>(p.rhs.size()) != m_) {
    throw InvalidInputError("solve_lp: inconsistent program dimensions");
  }
  for (double c : p.objective) {
    if (!std::isfinite(c)) {
      throw InvalidInputError("solve_lp: non-finite objective coefficient");
    }
  }
  for (int j = 0; j < n_; ++j) {
    const double lo = p.lower[j];
    const double hi = p.upper[j];
    if (std::isnan(lo) || std::isnan(hi) || lo == kLpInfinity || hi == -kLpInfinity || lo > hi) {
      throw InvalidInputError("solve_lp: invalid variable bounds");
    }
  }

  cols_.resize(total_);
  for (int i = 0; i < m_; ++i) {
    if (!std::isfinite(p.rhs[i])) {
      throw InvalidInputError("solve_lp: non-finite right-hand side");
    }
    for (const auto& e : p.rows[i]) {
      if (e.col < 0 || e.col >= n_) {
        throw InvalidInputError("solve_lp: row entry column out of range");
      }
      if (!std::isfinite(e.value)) {
        throw InvalidInputError("solve_lp: non-finite constraint coefficient");
      }
      cols_[e.col].push_back({i, e.value});
    }
  }

  cost_ = p.objective;
  lower_ = p.lower;
  upper_ = p.upper;
  rhs_ = p.rhs;
  cost_.resize(total_, 0.0);
  lower_.resize(total_, 0.0);
  upper_.resize(total_, kLpInfinity);

  b_scale_ = 1.0;
  for (double b : rhs_) {
    b_scale_ = std::max(b_scale_, std::abs(b));
  }
  iteration_limit_ = 20000 + 200L * (m_ + total_);
}

double SimplexSolver::nonbasic_value(int j) const {
  switch (state_[j]) {
    case VarState::kAtLower:
      return lower_[j];
    case VarState::kAtUpper:
      return upper_[j];
    default:
      return 0.0;
  }
}

void SimplexSolver::set_initial_point() {
  x_.assign(total_, 0.0);
  state_.assign(total_, VarState::kAtLower);
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lower_[j])) {
      state_[j] = VarState::kAtLower;
      x_[j] = lower_[j];
    } else if (std::isfinite(upper_[j])) {
      state_[j] = VarState::kAtUpper;
      x_[j] = upper_[j];
    } else {
      state_[j] = VarState::kFree;
      x_[j] = 0.0;
    }
  }

  // The residual of the nonbasic start decides each artificial's sign so the
  // all-artificial basis is feasible for phase 1.
  std::vector<double> resid = rhs_;
  for (int j = 0; j < n_; ++j) {
    const double v = x_[j];
    if (v != 0.0) {
      for (const auto& e : cols_[j]) {
        resid[e.row] -= e.value * v;
      }
    }
  }

  basis_.assign(m_, -1);
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const int art = n_ + i;
    const double sign = resid[i] >= 0.0 ? 1.0 : -1.0;
    cols_[art].clear();
    cols_[art].push_back({i, sign});
    basis_[i] = art;
    state_[art] = VarState::kBasic;
    x_[art] = std::abs(resid[i]);
    binv(i, i) = sign;
  }
}

void SimplexSolver::refactorize() {
  // Gauss-Jordan inversion of the basis matrix with partial pivoting.
  std::vector<double> mat(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    for (const auto& e : cols_[basis_[i]]) {
      mat[static_cast<std::size_t>(e.row) * m_ + i] = e.value;
    }
  }
  std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    inv[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  }
  auto M = [&](std::vector<double>& a, int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * m_ + c];
  };
  for (int col = 0; col < m_; ++col) {
    int pivot_row = col;
    double best = std::abs(M(mat, col, col));
    for (int r = col + 1; r < m_; ++r) {
      const double cand = std::abs(M(mat, r, col));
      if (cand > best) {
        best = cand;
        pivot_row = r;
      }
    }
    if (best < 1e-13) {
      throw SolverError("solve_lp: singular basis during refactorization");
    }
    if (pivot_row != col) {
      for (int c = 0; c < m_; ++c) {
        std::swap(M(mat, pivot_row, c), M(mat, col, c));
        std::swap(M(inv, pivot_row, c), M(inv, col, c));
      }
    }
    const double piv = M(mat, col, col);
    for (int c = 0; c < m_; ++c) {
      M(mat, col, c) /= piv;
      M(inv, col, c) /= piv;
    }
    for (int r = 0; r < m_; ++r) {
      if (r == col) {
        continue;
      }
      const double f = M(mat, r, col);
      if (f == 0.0) {
        continue;
      }
      for (int c = 0; c < m_; ++c) {
        M(mat, r, c) -= f * M(mat, col, c);
        M(inv, r, c) -= f * M(inv, col, c);
      }
    }
  }
  binv_ = std::move(inv);
  recompute_basics();
}

void SimplexSolver::recompute_basics() {
  std::vector<double> adjusted = rhs_;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == VarState::kBasic) {
      continue;
    }
    const double v = nonbasic_value(j);
    x_[j] = v;
    if (v != 0.0) {
      for (const auto& e : cols_[j]) {
        adjusted[e.row] -= e.value * v;
      }
    }
  }
  for (int i = 0; i < m_; ++i) {
    double acc = 0.0;
    for (int c = 0; c < m_; ++c) {
      acc += binv_at(i, c) * adjusted[c];
    }
    x_[basis_[i]] = acc;
  }
}

std::vector<double> SimplexSolver::compute_duals() const {
  std::vector<double> y(m_, 0.0);
  for (int r = 0; r < m_; ++r) {
    const double cb = work_cost_[basis_[r]];
    if (cb == 0.0) {
      continue;
    }
    const double* row = &binv_[static_cast<std::size_t>(r) * m_];
    for (int c = 0; c < m_; ++c) {
      y[c] += cb * row[c];
    }
  }
  return y;
}

double SimplexSolver::reduced_cost(int j, const std::vector<double>& y) const {
  double rc = work_cost_[j];
  for (const auto& e : cols_[j]) {
    rc -= y[e.row] * e.value;
  }
  return rc;
}

std::vector<double> SimplexSolver::ftran(int j) const {
  std::vector<double> d(m_, 0.0);
  for (const auto& e : cols_[j]) {
    const double v = e.value;
    for (int i = 0; i < m_; ++i) {
      d[i] += binv_at(i, e.row) * v;
    }
  }
  return d;
}

double SimplexSolver::phase_objective() const {
  double obj = 0.0;
  for (int j = 0; j < total_; ++j) {
    if (work_cost_[j] != 0.0) {
      obj += work_cost_[j] * x_[j];
    }
  }
  return obj;
}

void SimplexSolver::apply_pivot(int leave_row, int entering, const std::vector<double>& d) {
  const double piv = d[leave_row];
  double* prow = &binv_[static_cast<std::size_t>(leave_row) * m_];
  for (int c = 0; c < m_; ++c) {
    prow[c] /= piv;
  }
  for (int i = 0; i < m_; ++i) {
    if (i == leave_row) {
      continue;
    }
    const double f = d[i];
    if (f == 0.0) {
      continue;
    }
    double* irow = &binv_[static_cast<std::size_t>(i) * m_];
    for (int c = 0; c < m_; ++c) {
      irow[c] -= f * prow[c];
    }
  }
  basis_[leave_row] = entering;
}

bool SimplexSolver::iterate(bool phase_one) {
  const int refactor_period = 100;
  const int stall_limit = 500;
  bool bland = false;
  int since_refactor = 0;
  int stalled = 0;
  double last_obj = phase_objective();

  for (;;) {
    if (++iterations_ > iteration_limit_) {
      throw SolverError("solve_lp: iteration limit exceeded (" + std::to_string(iterations_) +
                        " pivots, phase " + (phase_one ? std::string("1") : std::string("2")) +
                        ", objective " + std::to_string(phase_objective()) + ")");
    }
    const std::vector<double> y = compute_duals();

    // Pricing: Dantzig by default, Bland while stalled.
    int entering = -1;
    int sigma = 0;
    double best_score = kRcTol;
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == VarState::kBasic || is_fixed(j)) {
        continue;
      }
      const double rc = reduced_cost(j, y);
      int dir = 0;
      if (state_[j] == VarState::kAtLower && rc < -kRcTol) {
        dir = 1;
      } else if (state_[j] == VarState::kAtUpper && rc > kRcTol) {
        dir = -1;
      } else if (state_[j] == VarState::kFree && std::abs(rc) > kRcTol) {
        dir = rc > 0.0 ? -1 : 1;
      }
      if (dir == 0) {
        continue;
      }
      if (bland) {
        entering = j;
        sigma = dir;
        break;
      }
      if (std::abs(rc) > best_score) {
        best_score = std::abs(rc);
        entering = j;
        sigma = dir;
      }
    }
    if (entering < 0) {
      return true;  // phase optimal
    }

    const std::vector<double> d = ftran(entering);

    // Ratio test: step t moves the entering variable by sigma * t and each
    // basic variable by -sigma * d[i] * t.  A finite gap between the
    // entering variable's own bounds competes as a bound flip.
    const double range = upper_[entering] - lower_[entering];
    double t_max = std::isfinite(range) ? range : kLpInfinity;
    int leave_row = -1;  // -1 means bound flip
    int leave_to_upper = 0;
    for (int i = 0; i < m_; ++i) {
      const double delta = static_cast<double>(sigma) * d[i];
      const int bvar = basis_[i];
      double ratio;
      int to_upper;
      if (delta > kPivotTol && std::isfinite(lower_[bvar])) {
        ratio = (x_[bvar] - lower_[bvar]) / delta;
        to_upper = 0;
      } else if (delta < -kPivotTol && std::isfinite(upper_[bvar])) {
        ratio = (upper_[bvar] - x_[bvar]) / (-delta);
        to_upper = 1;
      } else {
        continue;
      }
      if (ratio < 0.0) {
        ratio = 0.0;
      }
      bool take = false;
      if (ratio < t_max - kZeroTol) {
        take = true;
      } else if (ratio <= t_max + kZeroTol && leave_row >= 0) {
        // Tie between candidate rows.  Under Bland use the smallest variable
        // index; otherwise prefer evicting artificials, then smallest index.
        const int cur = basis_[leave_row];
        if (bland) {
          take = bvar < cur;
        } else if ((bvar >= n_) != (cur >= n_)) {
          take = bvar >= n_;
        } else {
          take = bvar < cur;
        }
      }
      if (take) {
        t_max = std::min(t_max, ratio);
        leave_row = i;
        leave_to_upper = to_upper;
      }
    }

    if (!std::isfinite(t_max)) {
      return false;  // unbounded ray
    }

    // Apply the step to the basic variables.
    if (t_max != 0.0) {
      for (int i = 0; i < m_; ++i) {
        if (d[i] != 0.0) {
          x_[basis_[i]] -= static_cast<double>(sigma) * d[i] * t_max;
        }
      }
    }

    if (leave_row < 0) {
      // Bound flip: the entering variable travels to its opposite bound.
      x_[entering] = sigma > 0 ? upper_[entering] : lower_[entering];
      state_[entering] = sigma > 0 ? VarState::kAtUpper : VarState::kAtLower;
    } else {
      const int leaving = basis_[leave_row];
      x_[entering] = nonbasic_value(entering) + static_cast<double>(sigma) * t_max;
      x_[leaving] = leave_to_upper ? upper_[leaving] : lower_[leaving];
      state_[leaving] = leave_to_upper ? VarState::kAtUpper : VarState::kAtLower;
      state_[entering] = VarState::kBasic;
      apply_pivot(leave_row, entering, d);
      if (++since_refactor >= refactor_period) {
        refactorize();
        since_refactor = 0;
      }
    }

    // Stall detection drives the Bland fallback.
    const double obj = phase_objective();
    if (obj < last_obj - kZeroTol * (1.0 + std::abs(last_obj))) {
      stalled = 0;
      bland = false;
    } else if (++stalled >= stall_limit) {
      bland = true;
    }
    last_obj = obj;
  }
}

void SimplexSolver::drive_out_artificials() {
  for (int r = 0; r < m_; ++r) {
    const int bvar = basis_[r];
    if (bvar < n_) {
      continue;
    }
    // Replace the zero-level artificial with any structural column that has
    // a usable pivot in this row.
    int replacement = -1;
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == VarState::kBasic || is_fixed(j)) {
        continue;
      }
      double dr = 0.0;
      for (const auto& e : cols_[j]) {
        dr += binv_at(r, e.row) * e.value;
      }
      if (std::abs(dr) > 1e-7) {
        replacement = j;
        break;
      }
    }
    if (replacement < 0) {
      // Redundant row: pin the artificial at zero and leave it basic.
      lower_[bvar] = 0.0;
      upper_[bvar] = 0.0;
      continue;
    }
    const std::vector<double> d = ftran(replacement);
    state_[replacement] = VarState::kBasic;
    state_[bvar] = VarState::kAtLower;
    lower_[bvar] = 0.0;
    upper_[bvar] = 0.0;
    apply_pivot(r, replacement, d);
    recompute_basics();
  }
  // Nonbasic artificials must never re-enter.
  for (int j = n_; j < total_; ++j) {
    if (state_[j] != VarState::kBasic) {
      lower_[j] = 0.0;
      upper_[j] = 0.0;
      x_[j] = 0.0;
    }
  }
}

LpSolution SimplexSolver::solve() {
  set_initial_point();

  // Phase 1: minimize the artificial mass.
  work_cost_.assign(total_, 0.0);
  for (int j = n_; j < total_; ++j) {
    work_cost_[j] = 1.0;
  }
  if (!iterate(true)) {
    throw SolverError("solve_lp: phase 1 reported an unbounded ray");
  }
  refactorize();
  const double infeasibility = phase_objective();
  const double feas_tol = 1e-8 * (1.0 + b_scale_);
  LpSolution sol;
  sol.iterations = iterations_;
  if (infeasibility > feas_tol) {
    sol.status = LpStatus::kInfeasible;
    return sol;
  }
  drive_out_artificials();

  // Phase 2: the real objective.
  work_cost_ = cost_;
  const bool bounded = iterate(false);
  refactorize();
  sol.iterations = iterations_;
  if (!bounded) {
    sol.status = LpStatus::kUnbounded;
    return sol;
  }

  sol.status = LpStatus::kOptimal;
  sol.x.assign(x_.begin(), x_.begin() + n_);
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) {
    obj += cost_[j] * x_[j];
  }
  sol.objective_value = obj;
  sol.duals = compute_duals();

  // Lagrangian bound from the final duals; brackets the primal objective.
  double dual_obj = 0.0;
  for (int i = 0; i < m_; ++i) {
    dual_obj += sol.duals[i] * rhs_[i];
  }
  for (int j = 0; j < n_; ++j) {
    if (state_[j] == VarState::kBasic || is_fixed(j)) {
      continue;
    }
    const double rc = reduced_cost(j, sol.duals);
    if (std::abs(rc) <= kRcTol * 16.0) {
      continue;
    }
    const double bound = rc > 0.0 ? lower_[j] : upper_[j];
    if (std::isfinite(bound)) {
      dual_obj += rc * bound;
    } else {
      dual_obj = -kLpInfinity;
      break;
    }
  }
  sol.dual_objective = dual_obj;

  // Residual check per the solution contract.
  std::vector<double> resid(m_, 0.0);
  for (int j = 0; j < total_; ++j) {
    const double v = x_[j];
    if (v != 0.0) {
      for (const auto& e : cols_[j]) {
        resid[e.row] += e.value * v;
      }
    }
  }
  double max_resid = 0.0;
  for (int i = 0; i < m_; ++i) {
    max_resid = std::max(max_resid, std::abs(resid[i] - rhs_[i]));
  }
  sol.max_residual = max_resid;
  if (max_resid > 1e-8 * (1.0 + b_scale_)) {
    throw SolverError("solve_lp: optimal basis violates constraints (residual " +
                      std::to_string(max_resid) + ")");
  }
  return sol;
}

}  // namespace

int LinearProgram::add_var(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return num_vars++;
}

void LinearProgram::add_row(std::vector<Entry> entries, double b) {
  rows.push_back(std::move(entries));
  rhs.push_back(b);
}

LpSolution solve_lp(const LinearProgram& program) {
  SimplexSolver solver(program);
  return solver.solve();
}

}  // namespace fairpost

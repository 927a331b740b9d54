#include "fairpost/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairpost/errors.hpp"
#include "fairpost/transport_lp.hpp"

namespace fairpost {

namespace {

constexpr double kMarginalTol = 1e-8;

void check_inputs(const std::vector<EmpiricalDistribution>& dists,
                  const std::vector<double>& weights) {
  if (dists.empty()) {
    throw InvalidInputError("barycenter: need at least one distribution");
  }
  if (weights.size() != dists.size()) {
    throw InvalidInputError("barycenter: one weight per distribution required");
  }
  const int k = dists.front().dim();
  if (k < 2) {
    throw InvalidInputError("barycenter: class count must be at least 2");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidInputError("barycenter: weights must be finite and nonnegative");
    }
    weight_sum += w;
  }
  if (weight_sum <= 0.0) {
    throw InvalidInputError("barycenter: weights must not all be zero");
  }
  for (const auto& dist : dists) {
    if (dist.size() == 0) {
      throw InvalidInputError("barycenter: empty distribution");
    }
    if (dist.dim() != k) {
      throw InvalidInputError("barycenter: distributions disagree on class count");
    }
  }
}

// Variable index of gamma_a(s, e_i) in the OPT program.
int var_index(const std::vector<int>& offsets, int k, int group, int atom, int vertex) {
  return offsets[group] + atom * k + vertex;
}

BarycenterResult solve_direct(const std::vector<EmpiricalDistribution>& dists,
                              const std::vector<double>& weights) {
  const int m = static_cast<int>(dists.size());
  const int k = dists.front().dim();
  const LinearProgram program = build_opt_lp(dists, weights);
  const LpSolution sol = solve_lp(program);
  if (sol.status != LpStatus::kOptimal) {
    throw SolverError("solve_barycenter: OPT program reported " +
                      std::string(sol.status == LpStatus::kInfeasible ? "infeasible" : "unbounded"));
  }

  std::vector<int> offsets(m, 0);
  for (int a = 1; a < m; ++a) {
    offsets[a] = offsets[a - 1] + k * dists[a - 1].size();
  }

  BarycenterResult result;
  result.weights = weights;
  result.used_direct_lp = true;
  result.optimality_gap = std::abs(sol.objective_value - sol.dual_objective);
  result.objective = sol.objective_value;
  result.plans.resize(m);
  for (int a = 0; a < m; ++a) {
    result.plans[a].group = a;
    for (int s = 0; s < dists[a].size(); ++s) {
      for (int i = 0; i < k; ++i) {
        const double mass = sol.x[var_index(offsets, k, a, s, i)];
        if (mass > 1e-14) {
          result.plans[a].entries.emplace_back(s, i, mass);
        }
      }
    }
  }

  result.q.pmf = result.plans[0].column_marginals(k);
  for (int a = 1; a < m; ++a) {
    const std::vector<double> cols = result.plans[a].column_marginals(k);
    for (int i = 0; i < k; ++i) {
      if (std::abs(cols[i] - result.q.pmf[i]) > kMarginalTol) {
        throw SolverError("solve_barycenter: group " + std::to_string(a + 1) +
                          " column marginals disagree with the barycenter");
      }
    }
  }
  return result;
}

struct InnerSolve {
  double value = 0.0;
  std::vector<double> sink_duals;
  double dual_intercept = 0.0;  // sum_s supply_s * alpha_s
  std::vector<std::tuple<int, int, double>> flows;
};

InnerSolve solve_group_transport(const EmpiricalDistribution& dist, const std::vector<double>& q) {
  const int k = static_cast<int>(q.size());
  TransportProblem problem;
  problem.num_sources = dist.size();
  problem.num_sinks = k;
  problem.supply = dist.mass;
  problem.demand = q;
  problem.cost.resize(static_cast<std::size_t>(dist.size()) * k);
  for (int s = 0; s < dist.size(); ++s) {
    for (int i = 0; i < k; ++i) {
      problem.cost[static_cast<std::size_t>(s) * k + i] = 2.0 * (1.0 - dist.support[s][i]);
    }
  }
  TransportSolution sol = solve_transportation(problem);
  InnerSolve out;
  out.value = sol.objective;
  out.sink_duals = std::move(sol.sink_duals);
  out.flows = std::move(sol.flows);
  out.dual_intercept = 0.0;
  for (int s = 0; s < dist.size(); ++s) {
    out.dual_intercept += dist.mass[s] * sol.source_duals[s];
  }
  return out;
}

BarycenterResult solve_cutting_plane(const std::vector<EmpiricalDistribution>& dists,
                                     const std::vector<double>& weights,
                                     const BarycenterOptions& options) {
  const int m = static_cast<int>(dists.size());
  const int k = dists.front().dim();

  // Master over (q, t_1..t_m) plus one slack per cut:
  //   min sum_a w_a t_a   s.t.  sum q = 1,  t_a >= intercept_j + lambda_j . q
  LinearProgram master;
  for (int i = 0; i < k; ++i) {
    master.add_var(0.0, 0.0, 1.0);
  }
  for (int a = 0; a < m; ++a) {
    master.add_var(weights[a], 0.0, kLpInfinity);
  }
  {
    std::vector<LinearProgram::Entry> row;
    for (int i = 0; i < k; ++i) {
      row.push_back({i, 1.0});
    }
    master.add_row(std::move(row), 1.0);
  }

  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  double best_ub = kLpInfinity;
  std::vector<double> best_q;
  std::vector<InnerSolve> best_inner;
  double lower_bound = -kLpInfinity;

  for (int iter = 0; iter < options.max_cuts; ++iter) {
    std::vector<InnerSolve> inner(m);
    double ub = 0.0;
    for (int a = 0; a < m; ++a) {
      inner[a] = solve_group_transport(dists[a], q);
      ub += weights[a] * inner[a].value;
    }
    if (ub < best_ub) {
      best_ub = ub;
      best_q = q;
      best_inner = std::move(inner);
      // Re-reference for cut generation below.
      inner = {};
    }
    const std::vector<InnerSolve>& cuts_from = inner.empty() ? best_inner : inner;

    if (best_ub - lower_bound <= options.gap_tol * (1.0 + std::abs(best_ub))) {
      break;
    }

    // One cut per group: t_a - lambda . q >= intercept.
    for (int a = 0; a < m; ++a) {
      const InnerSolve& cut = cuts_from[a];
      std::vector<LinearProgram::Entry> row;
      row.reserve(k + 2);
      const int slack = master.add_var(0.0, 0.0, kLpInfinity);
      row.push_back({k + a, 1.0});
      for (int i = 0; i < k; ++i) {
        row.push_back({i, -cut.sink_duals[i]});
      }
      row.push_back({slack, -1.0});
      master.add_row(std::move(row), cut.dual_intercept);
    }

    const LpSolution msol = solve_lp(master);
    if (msol.status != LpStatus::kOptimal) {
      throw SolverError("solve_barycenter: cutting-plane master not optimal");
    }
    lower_bound = msol.objective_value;
    for (int i = 0; i < k; ++i) {
      q[i] = std::max(msol.x[i], 0.0);
    }

    if (best_ub - lower_bound <= options.gap_tol * (1.0 + std::abs(best_ub))) {
      // Evaluate the final iterate so plans match the certified q.
      std::vector<InnerSolve> final_inner(m);
      double final_ub = 0.0;
      for (int a = 0; a < m; ++a) {
        final_inner[a] = solve_group_transport(dists[a], q);
        final_ub += weights[a] * final_inner[a].value;
      }
      if (final_ub < best_ub) {
        best_ub = final_ub;
        best_q = q;
        best_inner = std::move(final_inner);
      }
      break;
    }
  }

  if (best_q.empty()) {
    throw SolverError("solve_barycenter: cutting plane produced no iterate");
  }
  const double gap = best_ub - lower_bound;
  if (gap > 1e-6 * (1.0 + std::abs(best_ub))) {
    throw SolverError("solve_barycenter: cutting plane stalled with gap " + std::to_string(gap));
  }

  BarycenterResult result;
  result.weights = weights;
  result.used_direct_lp = false;
  result.optimality_gap = std::max(gap, 0.0);
  result.objective = best_ub;
  result.plans.resize(m);
  for (int a = 0; a < m; ++a) {
    result.plans[a].group = a;
    result.plans[a].entries = best_inner[a].flows;
    std::sort(result.plans[a].entries.begin(), result.plans[a].entries.end());
  }
  result.q.pmf = result.plans[0].column_marginals(k);
  for (int a = 1; a < m; ++a) {
    const std::vector<double> cols = result.plans[a].column_marginals(k);
    for (int i = 0; i < k; ++i) {
      if (std::abs(cols[i] - result.q.pmf[i]) > kMarginalTol) {
        throw SolverError("solve_barycenter: group " + std::to_string(a + 1) +
                          " column marginals disagree with the barycenter");
      }
    }
  }
  return result;
}

}  // namespace

std::vector<double> CouplingPlan::row_marginals(int support_size) const {
  std::vector<double> sums(support_size, 0.0);
  for (const auto& [atom, vertex, mass] : entries) {
    sums[atom] += mass;
  }
  return sums;
}

std::vector<double> CouplingPlan::column_marginals(int k) const {
  std::vector<double> sums(k, 0.0);
  for (const auto& [atom, vertex, mass] : entries) {
    sums[vertex] += mass;
  }
  return sums;
}

LinearProgram build_opt_lp(const std::vector<EmpiricalDistribution>& dists,
                           const std::vector<double>& weights) {
  check_inputs(dists, weights);
  const int m = static_cast<int>(dists.size());
  const int k = dists.front().dim();

  std::vector<int> offsets(m, 0);
  for (int a = 1; a < m; ++a) {
    offsets[a] = offsets[a - 1] + k * dists[a - 1].size();
  }

  LinearProgram program;
  for (int a = 0; a < m; ++a) {
    for (int s = 0; s < dists[a].size(); ++s) {
      for (int i = 0; i < k; ++i) {
        program.add_var(weights[a] * 2.0 * (1.0 - dists[a].support[s][i]));
      }
    }
  }

  // Row marginals: sum_i gamma_a(s, e_i) = r_a(s).
  for (int a = 0; a < m; ++a) {
    for (int s = 0; s < dists[a].size(); ++s) {
      std::vector<LinearProgram::Entry> row;
      row.reserve(k);
      for (int i = 0; i < k; ++i) {
        row.push_back({var_index(offsets, k, a, s, i), 1.0});
      }
      program.add_row(std::move(row), dists[a].mass[s]);
    }
  }
  // Column ties: group 1's vertex mass equals group a's, for a = 2..m.
  for (int a = 1; a < m; ++a) {
    for (int i = 0; i < k; ++i) {
      std::vector<LinearProgram::Entry> row;
      row.reserve(dists[0].size() + dists[a].size());
      for (int s = 0; s < dists[0].size(); ++s) {
        row.push_back({var_index(offsets, k, 0, s, i), 1.0});
      }
      for (int s = 0; s < dists[a].size(); ++s) {
        row.push_back({var_index(offsets, k, a, s, i), -1.0});
      }
      program.add_row(std::move(row), 0.0);
    }
  }
  // Total mass of group 1.
  {
    std::vector<LinearProgram::Entry> row;
    row.reserve(k * dists[0].size());
    for (int s = 0; s < dists[0].size(); ++s) {
      for (int i = 0; i < k; ++i) {
        row.push_back({var_index(offsets, k, 0, s, i), 1.0});
      }
    }
    program.add_row(std::move(row), 1.0);
  }
  return program;
}

BarycenterResult solve_barycenter(const std::vector<EmpiricalDistribution>& dists,
                                  const std::vector<double>& weights,
                                  const BarycenterOptions& options) {
  check_inputs(dists, weights);
  const int m = static_cast<int>(dists.size());
  const int k = dists.front().dim();
  long rows = 1 + static_cast<long>(k) * (m - 1);
  for (const auto& dist : dists) {
    rows += dist.size();
  }

  bool direct = options.path == BarycenterOptions::Path::kDirectLp;
  if (options.path == BarycenterOptions::Path::kAuto) {
    direct = rows <= options.direct_row_limit;
  }
  return direct ? solve_direct(dists, weights) : solve_cutting_plane(dists, weights, options);
}

TvBarycenterResult tv_barycenter(const std::vector<ClassPmf>& pmfs,
                                 const std::vector<double>& weights) {
  if (pmfs.empty() || weights.size() != pmfs.size()) {
    throw InvalidInputError("tv_barycenter: need one weight per pmf");
  }
  const int m = static_cast<int>(pmfs.size());
  const int k = pmfs.front().dim();
  for (const auto& p : pmfs) {
    if (p.dim() != k) {
      throw InvalidInputError("tv_barycenter: pmfs disagree on class count");
    }
  }

  // Variables: q (k), then per (a, i) a positive/negative deviation pair
  // with p_a(i) - q_i = d+ - d-.  Objective sums w_a/2 * (d+ + d-).
  LinearProgram program;
  for (int i = 0; i < k; ++i) {
    program.add_var(0.0, 0.0, 1.0);
  }
  std::vector<int> dev_offset(m, 0);
  for (int a = 0; a < m; ++a) {
    dev_offset[a] = program.num_vars;
    for (int i = 0; i < k; ++i) {
      program.add_var(0.5 * weights[a]);
      program.add_var(0.5 * weights[a]);
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < k; ++i) {
      program.add_row({{i, 1.0}, {dev_offset[a] + 2 * i, 1.0}, {dev_offset[a] + 2 * i + 1, -1.0}},
                      pmfs[a].pmf[i]);
    }
  }
  {
    std::vector<LinearProgram::Entry> row;
    for (int i = 0; i < k; ++i) {
      row.push_back({i, 1.0});
    }
    program.add_row(std::move(row), 1.0);
  }

  const LpSolution sol = solve_lp(program);
  if (sol.status != LpStatus::kOptimal) {
    throw SolverError("tv_barycenter: LP not optimal");
  }
  TvBarycenterResult result;
  result.q.pmf.assign(sol.x.begin(), sol.x.begin() + k);
  for (auto& v : result.q.pmf) {
    v = std::max(v, 0.0);
  }
  result.cost = sol.objective_value;
  return result;
}

std::vector<double> balanced_weights(int m) {
  if (m < 1) {
    throw InvalidInputError("balanced_weights: need at least one group");
  }
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

std::vector<double> counts_weights(const std::vector<double>& group_counts) {
  double total = 0.0;
  for (double c : group_counts) {
    if (!(c >= 0.0)) {
      throw InvalidInputError("counts_weights: counts must be nonnegative");
    }
    total += c;
  }
  if (total <= 0.0) {
    throw InvalidInputError("counts_weights: counts sum to zero");
  }
  std::vector<double> w(group_counts.size());
  for (std::size_t a = 0; a < w.size(); ++a) {
    w[a] = group_counts[a] / total;
  }
  return w;
}

}  // namespace fairpost

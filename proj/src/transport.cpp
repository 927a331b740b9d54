#include "fairpost/transport.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "fairpost/errors.hpp"
#include "fairpost/lp.hpp"

namespace fairpost {

namespace {

double default_tol_mass(const EmpiricalDistribution& dist, double tol_mass) {
  if (tol_mass >= 0.0) {
    return tol_mass;
  }
  double max_mass = 0.0;
  for (double m : dist.mass) {
    max_mass = std::max(max_mass, m);
  }
  return 1e-9 * max_mass;
}

}  // namespace

LookupTransport lookup_from_plan(const CouplingPlan& plan, const EmpiricalDistribution& dist) {
  const int k = dist.dim();
  LookupTransport map;
  map.support = dist.support;
  map.kernel.assign(dist.size(), std::vector<double>(k, 0.0));
  for (const auto& [atom, vertex, mass] : plan.entries) {
    map.kernel[atom][vertex] += mass;
  }
  for (int s = 0; s < dist.size(); ++s) {
    double row_sum = 0.0;
    for (double v : map.kernel[s]) {
      row_sum += v;
    }
    if (row_sum <= 0.0) {
      throw InvalidInputError("lookup_from_plan: atom " + std::to_string(s) +
                              " has zero row marginal");
    }
    for (double& v : map.kernel[s]) {
      v /= row_sum;
    }
  }
  return map;
}

BoundaryMatrix extract_boundaries(const CouplingPlan& plan, const EmpiricalDistribution& dist,
                                  double tol_mass) {
  const int k = dist.dim();
  const double tol = default_tol_mass(dist, tol_mass);
  BoundaryMatrix b;
  b.k = k;
  b.values.assign(static_cast<std::size_t>(k) * k, 0.0);
  for (const auto& [atom, vertex, mass] : plan.entries) {
    if (mass <= tol) {
      continue;
    }
    const SimplexPoint& s = dist.support[atom];
    for (int j = 0; j < k; ++j) {
      if (j == vertex) {
        continue;
      }
      // s . v_ij + 1 with v_ij = e_j - e_i.
      const double offset = s[j] - s[vertex] + 1.0;
      if (offset > b.at(vertex, j)) {
        b.at(vertex, j) = offset;
      }
    }
  }
  return b;
}

CenterPoint find_center(const BoundaryMatrix& boundaries) {
  const int k = boundaries.k;
  if (k < 2) {
    throw InvalidInputError("find_center: need k >= 2");
  }

  // max t  s.t.  z.v_ij - t >= B(i,j) - 1  for i != j,  sum(z) = 1.
  LinearProgram program;
  for (int i = 0; i < k; ++i) {
    program.add_var(0.0, -kLpInfinity, kLpInfinity);  // z_i
  }
  const int t_var = program.add_var(-1.0, -kLpInfinity, kLpInfinity);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) {
        continue;
      }
      const int slack = program.add_var(0.0, 0.0, kLpInfinity);
      program.add_row({{j, 1.0}, {i, -1.0}, {t_var, -1.0}, {slack, -1.0}},
                      boundaries.at(i, j) - 1.0);
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
    throw SolverError("find_center: margin LP not optimal");
  }
  CenterPoint center;
  center.z.assign(sol.x.begin(), sol.x.begin() + k);
  center.margin = sol.x[t_var];
  if (center.margin < -1e-6) {
    throw GeometryError("find_center: boundary polytope is empty (margin " +
                        std::to_string(center.margin) + "); coupling is not optimal");
  }
  return center;
}

NnTransport psi_from_center(const CenterPoint& center) {
  const int k = static_cast<int>(center.z.size());
  NnTransport map;
  map.psi.assign(k, 0.0);
  for (int i = 1; i < k; ++i) {
    map.psi[i] = 2.0 * (center.z[0] - center.z[i]);
  }
  return map;
}

int evaluate_nn(const NnTransport& map, const SimplexPoint& s) {
  const int k = map.dim();
  int best = 0;
  double best_cost = 2.0 * (1.0 - s[0]) - map.psi[0];
  for (int i = 1; i < k; ++i) {
    const double cost = 2.0 * (1.0 - s[i]) - map.psi[i];
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  return best;
}

int lookup_row_index(const LookupTransport& map, const SimplexPoint& s) {
  const int n = static_cast<int>(map.support.size());
  for (int idx = 0; idx < n; ++idx) {
    if (map.support[idx] == s) {
      return idx;
    }
  }
  int best = 0;
  double best_dist = kLpInfinity;
  for (int idx = 0; idx < n; ++idx) {
    double dist = 0.0;
    const auto& atom = map.support[idx].coords;
    for (std::size_t c = 0; c < atom.size(); ++c) {
      dist += std::abs(atom[c] - s.coords[c]);
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = idx;
    }
  }
  return best;
}

int apply_lookup(const LookupTransport& map, const SimplexPoint& s, RngStream& stream) {
  const int row = lookup_row_index(map, s);
  return stream.categorical(map.kernel[row]);
}

std::vector<std::vector<double>> smooth_draws(const SimplexPoint& s, const SmoothingConfig& cfg,
                                              int count, RngStream& stream) {
  if (!(cfg.epsilon > 0.0) || count < 1) {
    throw InvalidInputError("smooth_draws: epsilon must be positive and count >= 1");
  }
  const int k = s.dim();
  std::vector<std::vector<double>> draws(count, std::vector<double>(k));
  for (int d = 0; d < count; ++d) {
    for (int c = 0; c < k; ++c) {
      draws[d][c] = s[c] + stream.laplace(cfg.epsilon);
    }
  }
  return draws;
}

int count_disagreements(const NnTransport& map, const CouplingPlan& plan,
                        const EmpiricalDistribution& dist, double tol_mass) {
  const double tol = default_tol_mass(dist, tol_mass);
  std::set<std::pair<int, int>> carried;
  for (const auto& [atom, vertex, mass] : plan.entries) {
    if (mass > tol) {
      carried.insert({atom, vertex});
    }
  }
  int disagreements = 0;
  for (int s = 0; s < dist.size(); ++s) {
    const int assigned = evaluate_nn(map, dist.support[s]);
    if (!carried.count({s, assigned})) {
      ++disagreements;
    }
  }
  return disagreements;
}

}  // namespace fairpost

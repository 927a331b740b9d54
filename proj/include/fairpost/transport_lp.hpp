#pragma once

#include <tuple>
#include <vector>

namespace fairpost {

// A balanced, uncapacitated transportation problem on the complete bipartite
// graph: `supply` over sources, `demand` over sinks, dense cost matrix in
// row-major order (cost[s * num_sinks + i]).
struct TransportProblem {
  int num_sources = 0;
  int num_sinks = 0;
  std::vector<double> supply;
  std::vector<double> demand;
  std::vector<double> cost;

  double cost_at(int s, int i) const {
    return cost[static_cast<std::size_t>(s) * num_sinks + i];
  }
};

// An optimal basic solution.  Flows are the positive entries of a spanning
// tree basis, so there are fewer than num_sources + num_sinks of them.  The
// duals satisfy source_duals[s] + sink_duals[i] <= cost(s, i) with equality
// on the support; sink_duals is the subgradient of the optimal value with
// respect to the demand vector.
struct TransportSolution {
  double objective = 0.0;
  std::vector<std::tuple<int, int, double>> flows;
  std::vector<double> source_duals;
  std::vector<double> sink_duals;
  long pivots = 0;
};

// Network simplex specialized to transportation.  Starts from an
// artificial-root tree and keeps it strongly feasible (Cunningham's leaving
// rule), so it cannot cycle.  Deterministic.  Throws InvalidInputError for
// malformed inputs (negative masses, unbalanced totals) and SolverError when
// the pivot budget is exhausted.
TransportSolution solve_transportation(const TransportProblem& problem);

}  // namespace fairpost

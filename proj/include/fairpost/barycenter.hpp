#pragma once

#include <tuple>
#include <vector>

#include "fairpost/core.hpp"
#include "fairpost/lp.hpp"

namespace fairpost {

// One group's share of a barycenter coupling: sparse nonnegative masses over
// (support atom, vertex) pairs.  Row sums reproduce the group's empirical
// masses and column sums reproduce the shared barycenter pmf.
struct CouplingPlan {
  int group = 0;
  std::vector<std::tuple<int, int, double>> entries;  // (atom, vertex, mass)

  // Sum of masses sent from one atom / to one vertex.
  std::vector<double> row_marginals(int support_size) const;
  std::vector<double> column_marginals(int k) const;
};

// Barycenter pmf, per-group couplings, and the achieved weighted objective
// sum_a w_a * W1(r_a, q).
struct BarycenterResult {
  VertexDistribution q;
  std::vector<CouplingPlan> plans;
  double objective = 0.0;
  std::vector<double> weights;
  // Certified optimality gap: zero for the direct LP path, the final
  // cutting-plane gap otherwise.
  double optimality_gap = 0.0;
  bool used_direct_lp = true;
};

struct BarycenterOptions {
  enum class Path { kAuto, kDirectLp, kCuttingPlane };
  Path path = Path::kAuto;
  // Auto picks the direct LP while the equality-row count stays below this.
  int direct_row_limit = 400;
  double gap_tol = 1e-9;
  int max_cuts = 400;
};

// Builds the vertex-restricted Wasserstein-1 barycenter LP over the coupling
// variables gamma_a(s, e_i).  Variables are ordered group-major then
// atom-major then vertex; rows are the per-atom marginals, then the
// cross-group column ties for groups 2..m, then total mass.  The objective
// coefficient of (a, s, i) is w_a * 2(1 - s_i).
LinearProgram build_opt_lp(const std::vector<EmpiricalDistribution>& dists,
                           const std::vector<double>& weights);

// Solves the barycenter program and extracts the pmf and per-group plans.
// The pmf is read from group 1's plan; agreement of the other groups'
// column marginals is asserted, not assumed.
BarycenterResult solve_barycenter(const std::vector<EmpiricalDistribution>& dists,
                                  const std::vector<double>& weights,
                                  const BarycenterOptions& options = {});

struct TvBarycenterResult {
  VertexDistribution q;
  double cost = 0.0;
};

// Minimizes sum_a w_a * d_TV(p_a, q) over pmfs q; the realizable special
// case of the barycenter problem, solved as an LP with split absolute-value
// variables.
TvBarycenterResult tv_barycenter(const std::vector<ClassPmf>& pmfs,
                                 const std::vector<double>& weights);

// Weight helpers: balanced = 1/m each; counts = group sizes normalized.
std::vector<double> balanced_weights(int m);
std::vector<double> counts_weights(const std::vector<double>& group_counts);

}  // namespace fairpost

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fairpost/core.hpp"

namespace fairpost {

// Brute-force barycenter reference: enumerates candidate pmfs q on a simplex
// grid (two local refinement levels around the coarse argmin) and computes
// each inner transport cost exactly by enumerating transportation-polytope
// spanning trees over integer-rescaled masses.  Restricted to k <= 3 and
// supports of at most 6 atoms; masses must be rational with a small
// denominator or the rescaling fails with InvalidInputError.  Deliberately
// shares no code with the LP solvers it cross-checks.
double brute_barycenter(const std::vector<EmpiricalDistribution>& dists,
                        const std::vector<double>& weights, double grid_step);

// Mixture-of-Dirichlet score generator.  Labels are drawn from the score
// vector itself, so the identity map is the Bayes regressor on the generated
// problem (scores are calibrated by construction).
struct DirichletComponent {
  double weight = 1.0;
  std::vector<double> alpha;
};

struct GroupMixture {
  std::string name;
  std::vector<DirichletComponent> components;
  int samples = 0;
};

struct SyntheticSpec {
  int k = 0;
  std::vector<GroupMixture> groups;
  std::uint64_t seed = 0;

  void validate() const;
};

// Draws the dataset described by the spec; bit-for-bit reproducible per
// seed (each group has its own derived stream).
ScoredDataset generate(const SyntheticSpec& spec);

// One (n, seed) cell of the generalization harness.
struct GeneralizationCell {
  int n = 0;
  std::uint64_t seed = 0;
  double dp_gap = 0.0;
  double excess_error = 0.0;
};

struct GeneralizationReport {
  std::vector<GeneralizationCell> cells;
  std::vector<int> n_list;
  std::vector<double> mean_dp_gap;
  std::vector<double> mean_excess_error;
  double log_log_slope = 0.0;  // least-squares slope of log(dp gap) vs log(n)
};

// For each n and seed: fits a continuous-mode post-processor on n samples
// per group, evaluates DP gap and excess error on a fresh holdout, and
// reports per-n means plus the decay slope.  Cells are independently seeded
// and may run on `threads` workers without changing the results.
GeneralizationReport generalization_run(const SyntheticSpec& spec, const std::vector<int>& n_list,
                                        int holdout_n, const std::vector<std::uint64_t>& seeds,
                                        int threads = 1);

// CSV table of the raw cells (columns: n, seed, dp_gap, excess_error).
void write_generalization_csv(const GeneralizationReport& report, std::ostream& out);

}  // namespace fairpost

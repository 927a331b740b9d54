#pragma once

#include <cstdint>
#include <vector>

#include "fairpost/barycenter.hpp"
#include "fairpost/core.hpp"
#include "fairpost/rng.hpp"

namespace fairpost {

// Finite-case transport: a lookup table of per-atom kernel rows.  Unseen
// points fall back to the nearest support atom in l1 (ties to the earlier
// atom), a continuous deterministic version of the arbitrary assignment the
// finite-sample guarantee permits.
struct LookupTransport {
  std::vector<SimplexPoint> support;
  std::vector<std::vector<double>> kernel;  // one pmf row per atom
};

// Continuous-case transport: offset-nearest-vertex map
//   s -> argmin_i ||s - e_i||_1 - psi_i,  ties to the smallest index.
// The gauge is fixed by psi[0] = 0; adding a common constant to all offsets
// does not change the map.
struct NnTransport {
  std::vector<double> psi;

  int dim() const { return static_cast<int>(psi.size()); }
};

// Halfspace offsets of the set of points a coupling sends to each vertex:
// B(i, j) bounds mass sent to vertex i in direction v_ij = e_j - e_i.
struct BoundaryMatrix {
  int k = 0;
  std::vector<double> values;  // row-major k*k, zero diagonal

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * k + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * k + j]; }
};

// A point of the hyperplane sum(z) = 1 inside every boundary halfspace,
// together with the achieved minimum slack.
struct CenterPoint {
  std::vector<double> z;
  double margin = 0.0;
};

// Laplace smoothing parameters for distributions that are neither finite nor
// continuous.
struct SmoothingConfig {
  double epsilon = 0.0;
  int fit_draws = 10;
  int eval_draws = 100;
  std::uint64_t seed = 0;
};

// Normalizes a coupling's rows into Markov-kernel rows.  Throws
// InvalidInputError on a zero row marginal (degenerate atom).
LookupTransport lookup_from_plan(const CouplingPlan& plan, const EmpiricalDistribution& dist);

// Boundary offsets of a coupling: B(i, j) is the maximum of s.v_ij + 1 over
// support atoms carrying more than tol_mass to vertex i, or 0 if none do.
// tol_mass < 0 selects the default of 1e-9 times the largest atom mass.
BoundaryMatrix extract_boundaries(const CouplingPlan& plan, const EmpiricalDistribution& dist,
                                  double tol_mass = -1.0);

// Maximizes the uniform slack t subject to z.v_ij >= B(i,j) - 1 + t and
// sum(z) = 1.  Throws GeometryError when the polytope is empty beyond
// tolerance (margin < -1e-6), which signals a non-optimal coupling.
CenterPoint find_center(const BoundaryMatrix& boundaries);

// Offsets of the map whose decision boundaries are centered at z:
// psi[0] = 0 and psi[i] = 2(z[0] - z[i]).
NnTransport psi_from_center(const CenterPoint& center);

// Evaluates the offset-nearest-vertex map; ties go to the smallest index.
int evaluate_nn(const NnTransport& map, const SimplexPoint& s);

// Samples a class for s from its kernel row (exact support match, else the
// l1-nearest atom's row).  Deterministic given the stream.
int apply_lookup(const LookupTransport& map, const SimplexPoint& s, RngStream& stream);

// Index of the support atom used for s: exact match, else nearest in l1
// with ties to the earlier atom.
int lookup_row_index(const LookupTransport& map, const SimplexPoint& s);

// `count` perturbations s + N with N ~ Laplace(0, epsilon I); the draws live
// in R^k and are not projected here.
std::vector<std::vector<double>> smooth_draws(const SimplexPoint& s, const SmoothingConfig& cfg,
                                              int count, RngStream& stream);

// Number of support atoms whose coupling mass avoids the vertex the map
// assigns them (the map/coupling disagreement count of the agreement bound).
int count_disagreements(const NnTransport& map, const CouplingPlan& plan,
                        const EmpiricalDistribution& dist, double tol_mass = -1.0);

}  // namespace fairpost

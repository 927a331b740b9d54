#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fairpost {

// Simplex membership tolerance.  Points that fail it are projected rather
// than rejected by the pipeline; points within it pass through unchanged.
inline constexpr double kSimplexTol = 1e-9;

// A probability vector on the (k-1)-simplex: coordinates nonnegative and
// summing to one, both within kSimplexTol.
struct SimplexPoint {
  std::vector<double> coords;

  int dim() const { return static_cast<int>(coords.size()); }
  double operator[](int i) const { return coords[i]; }
  bool is_valid(double tol = kSimplexTol) const;

  friend bool operator==(const SimplexPoint& a, const SimplexPoint& b) {
    return a.coords == b.coords;
  }
};

// One scored example: a group index, a raw score vector (projected on
// ingestion into the pipeline), and an optional class label.
struct ScoredRow {
  int group = 0;
  std::vector<double> score;
  std::optional<int> label;
};

// A scored dataset with a token<->index map for groups.  Group indices are
// assigned by first appearance so ingestion is deterministic.
struct ScoredDataset {
  int k = 0;
  std::vector<ScoredRow> rows;
  std::vector<std::string> group_names;

  int num_groups() const { return static_cast<int>(group_names.size()); }
  // Returns the index for a token, inserting it if new.
  int intern_group(const std::string& token);
  // Returns the index for a token or -1 when unknown.
  int find_group(const std::string& token) const;
  // Throws DataError unless every declared group has at least one row and
  // every label is in range.
  void validate_for_fit() const;
};

// A weighted finite support on the simplex: pairwise-distinct atoms with
// positive masses summing to one.
struct EmpiricalDistribution {
  std::vector<SimplexPoint> support;
  std::vector<double> mass;

  int size() const { return static_cast<int>(support.size()); }
  int dim() const { return support.empty() ? 0 : support.front().dim(); }
};

// A pmf over the k vertices of the simplex (the barycenter lives here).
struct VertexDistribution {
  std::vector<double> pmf;

  int dim() const { return static_cast<int>(pmf.size()); }
  bool is_valid(double tol = 1e-12) const;
};

// A pmf over the k classes for one group.
struct ClassPmf {
  std::vector<double> pmf;

  int dim() const { return static_cast<int>(pmf.size()); }
};

// Euclidean projection onto the simplex by sort-then-threshold.  Inputs that
// already satisfy the simplex invariants are returned unchanged, which makes
// the operation exactly idempotent.  Throws InvalidInputError for non-finite
// input or k < 2.
SimplexPoint project_to_simplex(const std::vector<double>& v);

// l1 distance from a simplex point to vertex i: ||s - e_i||_1 = 2(1 - s_i).
double l1_vertex_cost(const SimplexPoint& s, int vertex);

// Builds the deduplicated empirical distribution of one group's scores.
// Scores are projected to the simplex, optionally rounded to `round_digits`
// decimals, and identical atoms are merged with summed mass.  Atom order
// follows first appearance.  Throws DataError when the group has no rows.
EmpiricalDistribution empirical_from_scores(const ScoredDataset& data, int group,
                                            std::optional<int> round_digits = std::nullopt);

}  // namespace fairpost

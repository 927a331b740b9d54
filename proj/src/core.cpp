#include "fairpost/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fairpost/errors.hpp"

namespace fairpost {

bool SimplexPoint::is_valid(double tol) const {
  if (coords.size() < 2) {
    return false;
  }
  double sum = 0.0;
  for (double c : coords) {
    if (!std::isfinite(c) || c < -tol) {
      return false;
    }
    sum += c;
  }
  return std::abs(sum - 1.0) <= tol * static_cast<double>(coords.size());
}

bool VertexDistribution::is_valid(double tol) const {
  if (pmf.empty()) {
    return false;
  }
  double sum = 0.0;
  for (double p : pmf) {
    if (!std::isfinite(p) || p < -tol) {
      return false;
    }
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol * static_cast<double>(pmf.size()) * 16.0;
}

int ScoredDataset::intern_group(const std::string& token) {
  const int existing = find_group(token);
  if (existing >= 0) {
    return existing;
  }
  group_names.push_back(token);
  return static_cast<int>(group_names.size()) - 1;
}

int ScoredDataset::find_group(const std::string& token) const {
  for (std::size_t i = 0; i < group_names.size(); ++i) {
    if (group_names[i] == token) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

void ScoredDataset::validate_for_fit() const {
  if (k < 2) {
    throw InvalidInputError("dataset: class count k must be at least 2");
  }
  std::vector<int> counts(group_names.size(), 0);
  for (const auto& row : rows) {
    if (row.group < 0 || row.group >= num_groups()) {
      throw DataError("dataset: row has group index out of range");
    }
    if (static_cast<int>(row.score.size()) != k) {
      throw DataError("dataset: row score dimension does not match k");
    }
    if (row.label && (*row.label < 0 || *row.label >= k)) {
      throw DataError("dataset: row label out of range");
    }
    ++counts[row.group];
  }
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] == 0) {
      throw DataError("dataset: group '" + group_names[a] + "' has no rows");
    }
  }
}

SimplexPoint project_to_simplex(const std::vector<double>& v) {
  const int k = static_cast<int>(v.size());
  if (k < 2) {
    throw InvalidInputError("project_to_simplex: need at least 2 coordinates");
  }
  for (double c : v) {
    if (!std::isfinite(c)) {
      throw InvalidInputError("project_to_simplex: non-finite coordinate");
    }
  }

  SimplexPoint candidate{v};
  if (candidate.is_valid()) {
    return candidate;
  }

  // Sort-then-threshold: find the largest prefix of the descending sort whose
  // shifted values stay positive, then clip.
  std::vector<double> sorted(v);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double prefix = 0.0;
  double theta = 0.0;
  for (int j = 0; j < k; ++j) {
    prefix += sorted[j];
    const double candidate_theta = (prefix - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate_theta > 0.0) {
      theta = candidate_theta;
    }
  }

  SimplexPoint out;
  out.coords.resize(k);
  for (int i = 0; i < k; ++i) {
    out.coords[i] = std::max(v[i] - theta, 0.0);
  }
  return out;
}

double l1_vertex_cost(const SimplexPoint& s, int vertex) {
  if (vertex < 0 || vertex >= s.dim()) {
    throw InvalidInputError("l1_vertex_cost: vertex index out of range");
  }
  return 2.0 * (1.0 - s[vertex]);
}

EmpiricalDistribution empirical_from_scores(const ScoredDataset& data, int group,
                                            std::optional<int> round_digits) {
  if (group < 0 || group >= data.num_groups()) {
    throw InvalidInputError("empirical_from_scores: group index out of range");
  }

  std::vector<const ScoredRow*> rows;
  for (const auto& row : data.rows) {
    if (row.group == group) {
      rows.push_back(&row);
    }
  }
  if (rows.empty()) {
    throw DataError("empirical_from_scores: group '" + data.group_names[group] + "' has no rows");
  }

  const double unit = 1.0 / static_cast<double>(rows.size());
  const double scale = round_digits ? std::pow(10.0, *round_digits) : 0.0;

  EmpiricalDistribution dist;
  std::map<std::vector<double>, int> index_of;
  for (const ScoredRow* row : rows) {
    SimplexPoint point = project_to_simplex(row->score);
    if (round_digits) {
      for (auto& c : point.coords) {
        c = std::round(c * scale) / scale;
      }
    }
    auto [it, inserted] = index_of.try_emplace(point.coords, dist.size());
    if (inserted) {
      dist.support.push_back(std::move(point));
      dist.mass.push_back(unit);
    } else {
      dist.mass[it->second] += unit;
    }
  }
  return dist;
}

}  // namespace fairpost

#pragma once

#include <vector>

#include "fairpost/core.hpp"

namespace fairpost {

// Per-group outcome statistics of a (possibly randomized) classifier:
// expected confusion counts and the predicted-class pmf.  Randomized
// classifiers are scored by expected outcome when per-row output pmfs are
// available.
struct GroupOutcome {
  int k = 0;
  // confusion[a][pred * k + truth] holds expected counts; empty when the
  // dataset carried unlabeled rows.
  std::vector<std::vector<double>> confusion;
  std::vector<ClassPmf> output_pmf;
  std::vector<double> sizes;
  bool labels_available = false;

  int num_groups() const { return static_cast<int>(output_pmf.size()); }
};

struct Prediction {
  int label = 0;
  std::vector<double> pmf;
};

// Aggregates predictions into per-group outcomes.  Output pmfs average the
// per-row pmfs; confusion counts are filled only when every row is labeled.
GroupOutcome collect_outcomes(const ScoredDataset& data, const std::vector<Prediction>& preds);

struct BalancedErrorReport {
  std::vector<double> per_group;  // Err_a
  double aggregate = 0.0;         // sum_a w_a * Err_a
  double mean_accuracy = 0.0;     // 100 * (1 - mean_a Err_a)
};

// Per-group misclassification rates and their weighted aggregate.  Accuracy
// is reported as the equal-weight mean over groups regardless of the
// aggregation weights.  Throws DataError when labels are missing.
BalancedErrorReport balanced_error(const GroupOutcome& outcomes, const std::vector<double>& weights);

// Half the maximum pairwise l1 distance between the groups' predicted-class
// pmfs; zero for a single group.
double dp_gap(const GroupOutcome& outcomes);
double dp_gap(const std::vector<ClassPmf>& output_pmfs);

// Accuracy ceiling of any perfectly accurate classifier forced to satisfy
// demographic parity on these label pmfs: 100 * (1 - weighted TV-barycenter
// cost), with weights normalized to sum to one.
double max_fair_accuracy(const std::vector<ClassPmf>& pmfs, const std::vector<double>& weights);

}  // namespace fairpost

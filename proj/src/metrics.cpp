#include "fairpost/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fairpost/barycenter.hpp"
#include "fairpost/errors.hpp"

namespace fairpost {

GroupOutcome collect_outcomes(const ScoredDataset& data, const std::vector<Prediction>& preds) {
  if (preds.size() != data.rows.size()) {
    throw InvalidInputError("collect_outcomes: one prediction per row required");
  }
  const int m = data.num_groups();
  const int k = data.k;

  GroupOutcome out;
  out.k = k;
  out.sizes.assign(m, 0.0);
  out.output_pmf.assign(m, ClassPmf{std::vector<double>(k, 0.0)});
  out.labels_available = true;
  for (const auto& row : data.rows) {
    if (!row.label) {
      out.labels_available = false;
      break;
    }
  }
  if (out.labels_available) {
    out.confusion.assign(m, std::vector<double>(static_cast<std::size_t>(k) * k, 0.0));
  }

  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    const auto& pred = preds[r];
    if (static_cast<int>(pred.pmf.size()) != k) {
      throw InvalidInputError("collect_outcomes: prediction pmf has wrong dimension");
    }
    out.sizes[row.group] += 1.0;
    for (int i = 0; i < k; ++i) {
      out.output_pmf[row.group].pmf[i] += pred.pmf[i];
    }
    if (out.labels_available) {
      auto& conf = out.confusion[row.group];
      for (int i = 0; i < k; ++i) {
        conf[static_cast<std::size_t>(i) * k + *row.label] += pred.pmf[i];
      }
    }
  }
  for (int a = 0; a < m; ++a) {
    if (out.sizes[a] > 0.0) {
      for (double& v : out.output_pmf[a].pmf) {
        v /= out.sizes[a];
      }
    }
  }
  return out;
}

BalancedErrorReport balanced_error(const GroupOutcome& outcomes, const std::vector<double>& weights) {
  const int m = outcomes.num_groups();
  if (!outcomes.labels_available) {
    throw DataError("balanced_error: labels required");
  }
  if (static_cast<int>(weights.size()) != m) {
    throw InvalidInputError("balanced_error: one weight per group required");
  }
  BalancedErrorReport report;
  report.per_group.assign(m, 0.0);
  double err_sum = 0.0;
  for (int a = 0; a < m; ++a) {
    if (outcomes.sizes[a] <= 0.0) {
      throw DataError("balanced_error: empty group");
    }
    double correct = 0.0;
    const auto& conf = outcomes.confusion[a];
    const int k = outcomes.k;
    for (int i = 0; i < k; ++i) {
      correct += conf[static_cast<std::size_t>(i) * k + i];
    }
    report.per_group[a] = 1.0 - correct / outcomes.sizes[a];
    report.aggregate += weights[a] * report.per_group[a];
    err_sum += report.per_group[a];
  }
  report.mean_accuracy = 100.0 * (1.0 - err_sum / static_cast<double>(m));
  return report;
}

double dp_gap(const std::vector<ClassPmf>& output_pmfs) {
  const int m = static_cast<int>(output_pmfs.size());
  if (m == 0) {
    throw InvalidInputError("dp_gap: need at least one group");
  }
  double gap = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      double tv = 0.0;
      for (int i = 0; i < output_pmfs[a].dim(); ++i) {
        tv += std::abs(output_pmfs[a].pmf[i] - output_pmfs[b].pmf[i]);
      }
      gap = std::max(gap, 0.5 * tv);
    }
  }
  return gap;
}

double dp_gap(const GroupOutcome& outcomes) { return dp_gap(outcomes.output_pmf); }

double max_fair_accuracy(const std::vector<ClassPmf>& pmfs, const std::vector<double>& weights) {
  if (pmfs.empty() || weights.size() != pmfs.size()) {
    throw InvalidInputError("max_fair_accuracy: need one weight per pmf");
  }
  double total = 0.0;
  for (double w : weights) {
    total += w;
  }
  if (total <= 0.0) {
    throw InvalidInputError("max_fair_accuracy: weights must have positive sum");
  }
  std::vector<double> normalized(weights);
  for (double& w : normalized) {
    w /= total;
  }
  const TvBarycenterResult tv = tv_barycenter(pmfs, normalized);
  return 100.0 * (1.0 - tv.cost);
}

}  // namespace fairpost

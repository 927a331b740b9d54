#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairpost/barycenter.hpp"
#include "fairpost/core.hpp"
#include "fairpost/metrics.hpp"
#include "fairpost/transport.hpp"

namespace fairpost {

enum class TransportKind { kLookup, kNn, kSmooth };

// One group's fitted post-processing map.
struct GroupTransport {
  TransportKind kind = TransportKind::kNn;
  LookupTransport lookup;    // kLookup
  NnTransport nn;            // kNn and kSmooth
  SmoothingConfig smoothing;  // kSmooth
};

struct FitDiagnostics {
  double objective = 0.0;
  double optimality_gap = 0.0;
  std::vector<int> support_sizes;
  std::vector<double> margins;       // per group; NaN for lookup groups
  std::vector<int> disagreements;    // per group; -1 for lookup groups
  // Optimality of the fitted classifier among derived fair classifiers
  // holds when the input scores are calibrated; no calibrator is learned.
  bool assumes_calibrated_scores = true;
};

// A fitted DP-fair post-processor: the barycenter pmf plus one transport per
// group.  Immutable after fitting and safe to share across threads.
struct PostProcessorModel {
  static constexpr const char* kFormatVersion = "1";

  int k = 0;
  int m = 0;
  std::vector<std::string> group_names;
  std::vector<double> weights;
  VertexDistribution q;
  std::vector<GroupTransport> transports;
  FitDiagnostics diagnostics;
};

struct FitOptions {
  enum class Mode { kAuto, kLookup, kNn, kSmooth };
  enum class WeightPolicy { kBalanced, kCounts, kExplicit };

  Mode mode = Mode::kAuto;
  WeightPolicy weight_policy = WeightPolicy::kBalanced;
  std::vector<double> explicit_weights;
  SmoothingConfig smoothing{/*epsilon=*/-1.0, /*fit_draws=*/10, /*eval_draws=*/100, /*seed=*/0};
  std::uint64_t seed = 0;
  std::optional<int> round_digits;
  // Auto mode picks lookup when every group's support is at most this large
  // and covers less than half the group's rows.
  int lookup_support_limit = 64;
  double lookup_distinct_fraction = 0.5;
  BarycenterOptions barycenter;
};

// Fits the post-processor: builds per-group empirical score distributions
// (after smoothing perturbations in smooth mode), solves the barycenter
// program, and extracts one transport per group.  Throws DataError for empty
// groups, SolverError/GeometryError on numerical failure.
PostProcessorModel fit(const ScoredDataset& data, const FitOptions& options = {});

// Applies the model row by row, returning the sampled class and the output
// pmf.  Fully deterministic given the seed: row i uses the stream derived
// from (seed, i).  Groups unseen at fit time are rejected.
std::vector<Prediction> apply(const PostProcessorModel& model, const ScoredDataset& data,
                              std::uint64_t seed);

// Model document (de)serialization.  Round trips are bit-exact: floating
// values are written as decimal strings with 17 significant digits.
std::string model_to_json(const PostProcessorModel& model);
PostProcessorModel model_from_json(const std::string& text);
void save_model(const PostProcessorModel& model, const std::string& path);
PostProcessorModel load_model(const std::string& path);

}  // namespace fairpost

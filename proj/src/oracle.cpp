#include "fairpost/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <mutex>

#include "fairpost/errors.hpp"
#include "fairpost/metrics.hpp"
#include "fairpost/pipeline.hpp"
#include "fairpost/rng.hpp"

namespace fairpost {

namespace {

// ---------------------------------------------------------------------------
// Spanning-tree machinery for the exact inner transport.
// ---------------------------------------------------------------------------

struct TreeEdge {
  int source = 0;
  int sink = 0;
  // Node masks of the component containing the edge's source endpoint after
  // the edge is removed; the edge's flow equals that side's net supply.
  std::uint32_t source_side = 0;
  std::uint32_t sink_side = 0;
};

using SpanningTree = std::vector<TreeEdge>;

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    for (int i = 0; i < n; ++i) {
      parent[i] = i;
    }
  }
  int find(int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return false;
    }
    parent[a] = b;
    return true;
  }
};

// All spanning trees of the complete bipartite graph K_{S,K}, each edge
// annotated with its source-endpoint side masks.
std::vector<SpanningTree> enumerate_trees(int S, int K) {
  const int nodes = S + K;
  const int edges = S * K;
  const int need = nodes - 1;
  std::vector<std::pair<int, int>> edge_list;
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < K; ++i) {
      edge_list.emplace_back(s, i);
    }
  }

  std::vector<SpanningTree> trees;
  std::vector<int> chosen;
  auto recurse = [&](auto&& self, int next) -> void {
    if (static_cast<int>(chosen.size()) == need) {
      DisjointSet dsu(nodes);
      for (int e : chosen) {
        if (!dsu.unite(edge_list[e].first, S + edge_list[e].second)) {
          return;  // cycle
        }
      }
      // need edges and no cycle over nodes vertices => spanning tree.
      SpanningTree tree;
      for (int e : chosen) {
        TreeEdge te;
        te.source = edge_list[e].first;
        te.sink = edge_list[e].second;
        // Flood the source side without the removed edge.
        std::uint32_t seen = 1u << te.source;  // node ids: sources 0..S-1, sinks S..S+K-1
        for (bool changed = true; changed;) {
          changed = false;
          for (int other : chosen) {
            if (other == e) {
              continue;
            }
            const std::uint32_t u = 1u << edge_list[other].first;
            const std::uint32_t v = 1u << (S + edge_list[other].second);
            const bool has_u = seen & u;
            const bool has_v = seen & v;
            if (has_u != has_v) {
              seen |= u | v;
              changed = true;
            }
          }
        }
        te.source_side = seen & ((1u << S) - 1u);
        te.sink_side = (seen >> S) & ((1u << K) - 1u);
        tree.push_back(te);
      }
      trees.push_back(std::move(tree));
      return;
    }
    if (next >= edges || edges - next < need - static_cast<int>(chosen.size())) {
      return;
    }
    chosen.push_back(next);
    self(self, next + 1);
    chosen.pop_back();
    self(self, next + 1);
  };
  recurse(recurse, 0);
  return trees;
}

const std::vector<SpanningTree>& cached_trees(int S, int K) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<SpanningTree>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto [it, inserted] = cache.try_emplace({S, K});
  if (inserted) {
    it->second = enumerate_trees(S, K);
  }
  return it->second;
}

// One group's exact inner-transport evaluator over integer-rescaled masses.
struct GroupEvaluator {
  int S = 0;
  int K = 0;
  std::int64_t denom = 0;  // masses are counts/denom
  const std::vector<SpanningTree>* trees = nullptr;
  // Per tree, per edge: integer supply dot, sink mask, and cost coefficient.
  struct EdgeEval {
    std::int64_t supply_dot;
    std::uint32_t sink_side;
    double cost;
  };
  std::vector<std::vector<EdgeEval>> evals;

  // Exact minimum transport cost to integer demands qint (summing to G).
  double min_cost(const std::vector<std::int64_t>& qint, std::int64_t G) const {
    double best = -1.0;
    for (const auto& tree : evals) {
      double cost = 0.0;
      bool feasible = true;
      for (const auto& edge : tree) {
        std::int64_t demand_dot = 0;
        for (int i = 0; i < K; ++i) {
          if (edge.sink_side & (1u << i)) {
            demand_dot += qint[i];
          }
        }
        // flow * denom * G = supply_dot * G - demand_dot * denom
        const std::int64_t flow_scaled = edge.supply_dot * G - demand_dot * denom;
        if (flow_scaled < 0) {
          feasible = false;
          break;
        }
        cost += edge.cost * static_cast<double>(flow_scaled);
      }
      if (feasible && (best < 0.0 || cost < best)) {
        best = cost;
      }
    }
    if (best < 0.0) {
      throw SolverError("brute_barycenter: no feasible spanning tree (internal error)");
    }
    return best / (static_cast<double>(denom) * static_cast<double>(G));
  }
};

std::int64_t find_denominator(const EmpiricalDistribution& dist) {
  for (std::int64_t d = 1; d <= 27720; ++d) {
    bool ok = true;
    for (double mass : dist.mass) {
      const double scaled = mass * static_cast<double>(d);
      if (std::abs(scaled - std::round(scaled)) > 1e-6) {
        ok = false;
        break;
      }
    }
    if (ok) {
      return d;
    }
  }
  throw InvalidInputError(
      "brute_barycenter: masses are not rational with a small denominator; rescaling failed");
}

GroupEvaluator make_evaluator(const EmpiricalDistribution& dist) {
  GroupEvaluator ev;
  ev.S = dist.size();
  ev.K = dist.dim();
  ev.denom = find_denominator(dist);
  ev.trees = &cached_trees(ev.S, ev.K);

  std::vector<std::int64_t> counts(ev.S);
  for (int s = 0; s < ev.S; ++s) {
    counts[s] = static_cast<std::int64_t>(std::llround(dist.mass[s] * ev.denom));
  }
  ev.evals.reserve(ev.trees->size());
  for (const auto& tree : *ev.trees) {
    std::vector<GroupEvaluator::EdgeEval> edges;
    edges.reserve(tree.size());
    for (const auto& te : tree) {
      GroupEvaluator::EdgeEval ee;
      ee.supply_dot = 0;
      for (int s = 0; s < ev.S; ++s) {
        if (te.source_side & (1u << s)) {
          ee.supply_dot += counts[s];
        }
      }
      ee.sink_side = te.sink_side;
      ee.cost = 2.0 * (1.0 - dist.support[te.source][te.sink]);
      edges.push_back(ee);
    }
    ev.evals.push_back(std::move(edges));
  }
  return ev;
}

double combined_cost(const std::vector<GroupEvaluator>& evals, const std::vector<double>& weights,
                     const std::vector<std::int64_t>& qint, std::int64_t G) {
  double total = 0.0;
  for (std::size_t a = 0; a < evals.size(); ++a) {
    total += weights[a] * evals[a].min_cost(qint, G);
  }
  return total;
}

std::uint64_t mix_cell_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0x165667b19e3779f9ULL);
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

}  // namespace

double brute_barycenter(const std::vector<EmpiricalDistribution>& dists,
                        const std::vector<double>& weights, double grid_step) {
  if (dists.empty() || weights.size() != dists.size()) {
    throw InvalidInputError("brute_barycenter: need one weight per distribution");
  }
  const int k = dists.front().dim();
  if (k < 2 || k > 3) {
    throw InvalidInputError("brute_barycenter: only k in {2, 3} is supported");
  }
  for (const auto& dist : dists) {
    if (dist.dim() != k) {
      throw InvalidInputError("brute_barycenter: dimension mismatch");
    }
    if (dist.size() > 6) {
      throw InvalidInputError("brute_barycenter: supports of more than 6 atoms are not supported");
    }
  }
  if (!(grid_step > 0.0) || grid_step > 0.5) {
    throw InvalidInputError("brute_barycenter: grid step must be in (0, 0.5]");
  }

  std::vector<GroupEvaluator> evals;
  evals.reserve(dists.size());
  for (const auto& dist : dists) {
    evals.push_back(make_evaluator(dist));
  }

  // Base grid scan, then two levels of tenfold local refinement.
  std::int64_t G = std::llround(1.0 / grid_step);
  std::vector<std::int64_t> best;
  double best_cost = -1.0;

  auto scan = [&](std::int64_t scale, const std::vector<std::int64_t>& center,
                  std::int64_t radius) {
    std::vector<std::int64_t> q(k, 0);
    const auto consider = [&](const std::vector<std::int64_t>& cand) {
      const double cost = combined_cost(evals, weights, cand, scale);
      if (best_cost < 0.0 || cost < best_cost) {
        best_cost = cost;
        best = cand;
      }
    };
    const std::int64_t lo0 = center.empty() ? 0 : std::max<std::int64_t>(0, center[0] - radius);
    const std::int64_t hi0 = center.empty() ? scale : std::min<std::int64_t>(scale, center[0] + radius);
    if (k == 2) {
      for (std::int64_t i = lo0; i <= hi0; ++i) {
        q[0] = i;
        q[1] = scale - i;
        consider(q);
      }
    } else {
      const std::int64_t lo1 = center.empty() ? 0 : std::max<std::int64_t>(0, center[1] - radius);
      const std::int64_t hi1 = center.empty() ? scale : std::min<std::int64_t>(scale, center[1] + radius);
      for (std::int64_t i = lo0; i <= hi0; ++i) {
        for (std::int64_t j = lo1; j <= std::min(hi1, scale - i); ++j) {
          q[0] = i;
          q[1] = j;
          q[2] = scale - i - j;
          consider(q);
        }
      }
    }
  };

  scan(G, {}, 0);
  for (int level = 0; level < 2; ++level) {
    std::vector<std::int64_t> center(best);
    for (auto& c : center) {
      c *= 10;
    }
    G *= 10;
    best_cost = -1.0;
    best.clear();
    scan(G, center, 20);
  }
  return best_cost;
}

void SyntheticSpec::validate() const {
  if (k < 2) {
    throw InvalidInputError("synthetic spec: k must be at least 2");
  }
  if (groups.empty()) {
    throw InvalidInputError("synthetic spec: need at least one group");
  }
  for (const auto& group : groups) {
    if (group.samples < 1) {
      throw InvalidInputError("synthetic spec: group '" + group.name + "' needs samples >= 1");
    }
    if (group.components.empty()) {
      throw InvalidInputError("synthetic spec: group '" + group.name + "' needs a mixture component");
    }
    for (const auto& comp : group.components) {
      if (!(comp.weight > 0.0)) {
        throw InvalidInputError("synthetic spec: component weights must be positive");
      }
      if (static_cast<int>(comp.alpha.size()) != k) {
        throw InvalidInputError("synthetic spec: concentration vectors must have length k");
      }
      for (double a : comp.alpha) {
        if (!(a > 0.0)) {
          throw InvalidInputError("synthetic spec: concentrations must be positive");
        }
      }
    }
  }
}

ScoredDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  ScoredDataset data;
  data.k = spec.k;
  for (std::size_t a = 0; a < spec.groups.size(); ++a) {
    const auto& group = spec.groups[a];
    const int idx = data.intern_group(group.name);
    RngStream stream(spec.seed, static_cast<std::uint64_t>(a));
    std::vector<double> comp_weights;
    for (const auto& comp : group.components) {
      comp_weights.push_back(comp.weight);
    }
    for (int i = 0; i < group.samples; ++i) {
      const int comp = stream.categorical(comp_weights);
      const std::vector<double> score = stream.dirichlet(group.components[comp].alpha);
      const int label = stream.categorical(score);
      data.rows.push_back({idx, score, label});
    }
  }
  return data;
}

GeneralizationReport generalization_run(const SyntheticSpec& spec, const std::vector<int>& n_list,
                                        int holdout_n, const std::vector<std::uint64_t>& seeds,
                                        int threads) {
  spec.validate();
  if (n_list.empty() || seeds.empty() || holdout_n < 1) {
    throw InvalidInputError("generalization_run: need sizes, seeds, and a holdout");
  }

  struct CellSpec {
    int n;
    std::uint64_t seed;
  };
  std::vector<CellSpec> cells;
  for (const int n : n_list) {
    for (const std::uint64_t seed : seeds) {
      cells.push_back({n, seed});
    }
  }

  auto run_cell = [&](const CellSpec& cell) -> GeneralizationCell {
    SyntheticSpec train_spec = spec;
    train_spec.seed = mix_cell_seed(cell.seed, 2 * static_cast<std::uint64_t>(cell.n) + 1);
    for (auto& group : train_spec.groups) {
      group.samples = cell.n;
    }
    SyntheticSpec holdout_spec = spec;
    // The holdout depends on the seed only, so every n faces the same data.
    holdout_spec.seed = mix_cell_seed(cell.seed, 0);
    for (auto& group : holdout_spec.groups) {
      group.samples = holdout_n;
    }

    const ScoredDataset train = generate(train_spec);
    const ScoredDataset holdout = generate(holdout_spec);

    FitOptions options;
    options.mode = FitOptions::Mode::kNn;
    options.weight_policy = FitOptions::WeightPolicy::kExplicit;
    options.explicit_weights.assign(spec.groups.size(), 1.0);
    options.seed = cell.seed;
    const PostProcessorModel model = fit(train, options);

    const std::vector<Prediction> preds = apply(model, holdout, cell.seed);
    const GroupOutcome outcomes = collect_outcomes(holdout, preds);
    const BalancedErrorReport err =
        balanced_error(outcomes, std::vector<double>(spec.groups.size(), 1.0));

    GeneralizationCell out;
    out.n = cell.n;
    out.seed = cell.seed;
    out.dp_gap = dp_gap(outcomes);
    out.excess_error = err.aggregate - model.diagnostics.objective / 2.0;
    return out;
  };

  GeneralizationReport report;
  report.cells.resize(cells.size());
  if (threads <= 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      report.cells[c] = run_cell(cells[c]);
    }
  } else {
    std::vector<std::future<GeneralizationCell>> futures;
    futures.reserve(cells.size());
    std::size_t next = 0;
    while (next < cells.size() || !futures.empty()) {
      while (next < cells.size() && static_cast<int>(futures.size()) < threads) {
        futures.push_back(std::async(std::launch::async, run_cell, cells[next]));
        ++next;
      }
      // Collect in launch order; cell results are position-indexed so the
      // report does not depend on completion order.
      const std::size_t done = next - futures.size();
      report.cells[done] = futures.front().get();
      futures.erase(futures.begin());
    }
  }

  report.n_list = n_list;
  for (const int n : n_list) {
    double gap_sum = 0.0;
    double excess_sum = 0.0;
    int count = 0;
    for (const auto& cell : report.cells) {
      if (cell.n == n) {
        gap_sum += cell.dp_gap;
        excess_sum += cell.excess_error;
        ++count;
      }
    }
    report.mean_dp_gap.push_back(gap_sum / count);
    report.mean_excess_error.push_back(excess_sum / count);
  }

  // Least-squares slope of log(mean gap) against log(n).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int points = static_cast<int>(n_list.size());
  for (int p = 0; p < points; ++p) {
    const double x = std::log(static_cast<double>(n_list[p]));
    const double y = std::log(std::max(report.mean_dp_gap[p], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = points * sxx - sx * sx;
  report.log_log_slope = denom != 0.0 ? (points * sxy - sx * sy) / denom : 0.0;
  return report;
}

void write_generalization_csv(const GeneralizationReport& report, std::ostream& out) {
  out << "n,seed,dp_gap,excess_error\n";
  char buf[160];
  for (const auto& cell : report.cells) {
    std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%.17g\n", cell.n,
                  static_cast<unsigned long long>(cell.seed), cell.dp_gap, cell.excess_error);
    out << buf;
  }
}

}  // namespace fairpost

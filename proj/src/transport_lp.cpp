#include "fairpost/transport_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fairpost/errors.hpp"

namespace fairpost {

namespace {

constexpr double kBigCost = 1e6;   // artificial arc cost; real costs are O(1)
constexpr double kRcTol = 1e-10;   // entering threshold on reduced costs
constexpr double kMassTol = 1e-9;  // residual tolerance on balance checks

struct Arc {
  int tail;
  int head;
  double cost;
};

class NetworkSimplex {
 public:
  explicit NetworkSimplex(const TransportProblem& p);
  TransportSolution run();

 private:
  const TransportProblem& p_;
  int S_;
  int K_;
  int root_;
  int num_nodes_;
  int num_real_arcs_;

  std::vector<Arc> arcs_;
  std::vector<double> flow_;
  std::vector<bool> in_tree_;

  std::vector<int> parent_;
  std::vector<int> parent_arc_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> children_;
  std::vector<int> pos_in_parent_;

  long pivots_ = 0;
  long pivot_limit_ = 0;
  int cursor_ = 0;  // block-pricing scan position

  double reduced_cost(int a) const {
    return arcs_[a].cost - pi_[arcs_[a].tail] + pi_[arcs_[a].head];
  }
  void detach(int child);
  void attach(int child, int parent, int arc);
  int find_entering();
  void pivot(int entering);
  void refresh_subtree(int start);
  void rebuild_potentials();
  void recompute_tree_flows();
};

NetworkSimplex::NetworkSimplex(const TransportProblem& p) : p_(p) {
  S_ = p.num_sources;
  K_ = p.num_sinks;
  if (S_ < 1 || K_ < 1) {
    throw InvalidInputError("transportation: need at least one source and one sink");
  }
  if (static_cast<int>(p.supply.size()) != S_ || static_cast<int>(p.demand.size()) != K_ ||
      static_cast<int>(p.cost.size()) != static_cast<std::size_t>(S_) * K_) {
    throw InvalidInputError("transportation: inconsistent dimensions");
  }
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double s : p.supply) {
    if (!std::isfinite(s) || s < 0.0) {
      throw InvalidInputError("transportation: supplies must be finite and nonnegative");
    }
    total_supply += s;
  }
  for (double d : p.demand) {
    if (!std::isfinite(d) || d < 0.0) {
      throw InvalidInputError("transportation: demands must be finite and nonnegative");
    }
    total_demand += d;
  }
  if (std::abs(total_supply - total_demand) > kMassTol * (1.0 + total_supply)) {
    throw InvalidInputError("transportation: supply and demand totals differ");
  }

  root_ = S_ + K_;
  num_nodes_ = S_ + K_ + 1;
  num_real_arcs_ = S_ * K_;

  arcs_.reserve(num_real_arcs_ + S_ + K_);
  for (int s = 0; s < S_; ++s) {
    for (int i = 0; i < K_; ++i) {
      arcs_.push_back({s, S_ + i, p.cost_at(s, i)});
    }
  }
  // Artificial arcs keep the start strongly feasible: zero-flow tree arcs
  // must point toward the root, so zero-demand sinks get that orientation.
  for (int s = 0; s < S_; ++s) {
    arcs_.push_back({s, root_, kBigCost});
  }
  for (int i = 0; i < K_; ++i) {
    if (p.demand[i] > 0.0) {
      arcs_.push_back({root_, S_ + i, kBigCost});
    } else {
      arcs_.push_back({S_ + i, root_, kBigCost});
    }
  }

  flow_.assign(arcs_.size(), 0.0);
  in_tree_.assign(arcs_.size(), false);
  parent_.assign(num_nodes_, -1);
  parent_arc_.assign(num_nodes_, -1);
  depth_.assign(num_nodes_, 0);
  pi_.assign(num_nodes_, 0.0);
  children_.assign(num_nodes_, {});
  pos_in_parent_.assign(num_nodes_, -1);

  children_[root_].reserve(S_ + K_);
  for (int s = 0; s < S_; ++s) {
    const int a = num_real_arcs_ + s;
    flow_[a] = p.supply[s];
    in_tree_[a] = true;
    depth_[s] = 1;
    pi_[s] = kBigCost;  // tree arc s->root: c - pi_s + pi_root = 0
    attach(s, root_, a);
  }
  for (int i = 0; i < K_; ++i) {
    const int a = num_real_arcs_ + S_ + i;
    const int node = S_ + i;
    flow_[a] = p.demand[i];
    in_tree_[a] = true;
    depth_[node] = 1;
    pi_[node] = arcs_[a].tail == root_ ? -kBigCost : kBigCost;
    attach(node, root_, a);
  }

  pivot_limit_ = 20000 + 60L * (static_cast<long>(S_) + K_);
}

void NetworkSimplex::detach(int child) {
  auto& siblings = children_[parent_[child]];
  const int pos = pos_in_parent_[child];
  const int moved = siblings.back();
  siblings[pos] = moved;
  pos_in_parent_[moved] = pos;
  siblings.pop_back();
  pos_in_parent_[child] = -1;
}

void NetworkSimplex::attach(int child, int parent, int arc) {
  parent_[child] = parent;
  parent_arc_[child] = arc;
  pos_in_parent_[child] = static_cast<int>(children_[parent].size());
  children_[parent].push_back(child);
}

int NetworkSimplex::find_entering() {
  // Block pricing over the real arcs with a persistent cursor.
  const int block = std::max(64, num_real_arcs_ / 16);
  int scanned = 0;
  while (scanned < num_real_arcs_) {
    int best = -1;
    double best_rc = -kRcTol;
    const int limit = std::min(block, num_real_arcs_ - scanned);
    for (int t = 0; t < limit; ++t) {
      const int a = cursor_;
      cursor_ = cursor_ + 1 == num_real_arcs_ ? 0 : cursor_ + 1;
      if (in_tree_[a]) {
        continue;
      }
      const double rc = reduced_cost(a);
      if (rc < best_rc) {
        best_rc = rc;
        best = a;
      }
    }
    scanned += limit;
    if (best >= 0) {
      return best;
    }
  }
  return -1;
}

void NetworkSimplex::pivot(int entering) {
  const int u = arcs_[entering].tail;
  const int v = arcs_[entering].head;

  // Walk both endpoints to the apex, collecting the cycle.  The circulation
  // direction is u -> v through the entering arc and v -> apex -> u through
  // the tree, so flow moves parent-to-child on the u side and
  // child-to-parent on the v side.
  int a_node = u;
  int b_node = v;
  std::vector<int> u_side;   // arcs from u up to the apex
  std::vector<int> u_nodes;  // child endpoint of each u-side arc
  std::vector<int> v_side;
  std::vector<int> v_nodes;
  while (depth_[a_node] > depth_[b_node]) {
    u_side.push_back(parent_arc_[a_node]);
    u_nodes.push_back(a_node);
    a_node = parent_[a_node];
  }
  while (depth_[b_node] > depth_[a_node]) {
    v_side.push_back(parent_arc_[b_node]);
    v_nodes.push_back(b_node);
    b_node = parent_[b_node];
  }
  while (a_node != b_node) {
    u_side.push_back(parent_arc_[a_node]);
    u_nodes.push_back(a_node);
    a_node = parent_[a_node];
    v_side.push_back(parent_arc_[b_node]);
    v_nodes.push_back(b_node);
    b_node = parent_[b_node];
  }

  // Ratio test.  An arc traversed against the circulation loses flow.  The
  // strongly-feasible leaving rule walks the cycle from the apex in the
  // circulation direction (down the u side, across, up the v side) and picks
  // the last blocking arc, so ties use <= on the u side pass too.
  double delta = std::numeric_limits<double>::infinity();
  int leaving = -1;
  int cut_child = -1;
  bool cut_on_v_side = false;
  for (int idx = static_cast<int>(u_side.size()) - 1; idx >= 0; --idx) {
    const int a = u_side[idx];
    const int child = u_nodes[idx];
    const bool losing = arcs_[a].tail == child;  // push is parent -> child here
    if (losing && flow_[a] <= delta) {
      delta = flow_[a];
      leaving = a;
      cut_child = child;
      cut_on_v_side = false;
    }
  }
  for (std::size_t idx = 0; idx < v_side.size(); ++idx) {
    const int a = v_side[idx];
    const int child = v_nodes[idx];
    const bool losing = arcs_[a].head == child;  // push is child -> parent here
    if (losing && flow_[a] <= delta) {
      delta = flow_[a];
      leaving = a;
      cut_child = child;
      cut_on_v_side = true;
    }
  }
  if (leaving < 0) {
    throw SolverError("transportation: unbounded cycle (corrupt instance)");
  }

  // Apply the circulation.
  if (delta > 0.0) {
    flow_[entering] += delta;
    for (std::size_t idx = 0; idx < u_side.size(); ++idx) {
      const int a = u_side[idx];
      const bool losing = arcs_[a].tail == u_nodes[idx];
      flow_[a] += losing ? -delta : delta;
    }
    for (std::size_t idx = 0; idx < v_side.size(); ++idx) {
      const int a = v_side[idx];
      const bool losing = arcs_[a].head == v_nodes[idx];
      flow_[a] += losing ? -delta : delta;
    }
  }

  // Exchange the arcs and re-hang the subtree that lost its parent arc.
  in_tree_[entering] = true;
  in_tree_[leaving] = false;
  flow_[leaving] = 0.0;

  // The severed subtree below cut_child contains the cycle endpoint on the
  // side the leaving arc was found; re-root the subtree at that endpoint and
  // hang it off the other one.
  const int in_sub = cut_on_v_side ? v : u;
  const int in_main = cut_on_v_side ? u : v;

  detach(cut_child);
  // Path from in_sub up to cut_child, then reverse the parent pointers.
  std::vector<int> path;
  for (int node = in_sub;; node = parent_[node]) {
    path.push_back(node);
    if (node == cut_child) {
      break;
    }
  }
  for (int idx = static_cast<int>(path.size()) - 1; idx > 0; --idx) {
    const int upper = path[idx];
    const int lower = path[idx - 1];
    const int arc = parent_arc_[lower];
    detach(lower);
    attach(upper, lower, arc);
  }
  attach(in_sub, in_main, entering);
  refresh_subtree(in_sub);
}

void NetworkSimplex::refresh_subtree(int start) {
  // Iterative DFS refreshing depth and potential below `start`.
  static thread_local std::vector<int> stack;
  stack.clear();
  {
    const int parent = parent_[start];
    const int a = parent_arc_[start];
    depth_[start] = depth_[parent] + 1;
    pi_[start] = arcs_[a].tail == start ? pi_[parent] + arcs_[a].cost : pi_[parent] - arcs_[a].cost;
  }
  stack.push_back(start);
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    for (const int child : children_[node]) {
      const int a = parent_arc_[child];
      depth_[child] = depth_[node] + 1;
      pi_[child] = arcs_[a].tail == child ? pi_[node] + arcs_[a].cost : pi_[node] - arcs_[a].cost;
      stack.push_back(child);
    }
  }
}

void NetworkSimplex::rebuild_potentials() {
  pi_[root_] = 0.0;
  depth_[root_] = 0;
  static thread_local std::vector<int> stack;
  stack.clear();
  stack.push_back(root_);
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    for (const int child : children_[node]) {
      const int a = parent_arc_[child];
      depth_[child] = depth_[node] + 1;
      pi_[child] = arcs_[a].tail == child ? pi_[node] + arcs_[a].cost : pi_[node] - arcs_[a].cost;
      stack.push_back(child);
    }
  }
}

void NetworkSimplex::recompute_tree_flows() {
  // Exact flows from subtree balances, replacing incrementally updated
  // values.  Children are processed before parents.
  std::vector<int> order;
  order.reserve(num_nodes_);
  order.push_back(root_);
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    for (const int child : children_[order[idx]]) {
      order.push_back(child);
    }
  }
  std::vector<double> balance(num_nodes_, 0.0);
  for (int s = 0; s < S_; ++s) {
    balance[s] = p_.supply[s];
  }
  for (int i = 0; i < K_; ++i) {
    balance[S_ + i] = -p_.demand[i];
  }
  for (int idx = static_cast<int>(order.size()) - 1; idx >= 1; --idx) {
    const int node = order[idx];
    const int a = parent_arc_[node];
    const double excess = balance[node];
    double f = arcs_[a].tail == node ? excess : -excess;
    if (f < 0.0) {
      if (f < -kMassTol) {
        throw SolverError("transportation: negative tree flow after cleanup");
      }
      f = 0.0;
    }
    flow_[a] = f;
    balance[parent_[node]] += excess;
  }
  if (std::abs(balance[root_]) > kMassTol) {
    throw SolverError("transportation: unbalanced tree after cleanup");
  }
}

TransportSolution NetworkSimplex::run() {
  for (;;) {
    const int entering = find_entering();
    if (entering < 0) {
      break;
    }
    if (++pivots_ > pivot_limit_) {
      throw SolverError("transportation: pivot limit exceeded (" + std::to_string(pivots_) + ")");
    }
    pivot(entering);
  }

  rebuild_potentials();
  recompute_tree_flows();

  TransportSolution sol;
  sol.pivots = pivots_;
  double objective = 0.0;
  for (int a = 0; a < num_real_arcs_; ++a) {
    if (in_tree_[a] && flow_[a] > 0.0) {
      objective += arcs_[a].cost * flow_[a];
      sol.flows.emplace_back(arcs_[a].tail, arcs_[a].head - S_, flow_[a]);
    }
  }
  // Any artificial arc still carrying mass means the instance was not
  // actually balanced.
  for (int a = num_real_arcs_; a < static_cast<int>(arcs_.size()); ++a) {
    if (in_tree_[a] && flow_[a] > kMassTol) {
      throw SolverError("transportation: artificial arc carries flow at optimum");
    }
  }
  sol.objective = objective;
  sol.source_duals.resize(S_);
  sol.sink_duals.resize(K_);
  for (int s = 0; s < S_; ++s) {
    sol.source_duals[s] = pi_[s];
  }
  for (int i = 0; i < K_; ++i) {
    sol.sink_duals[i] = -pi_[S_ + i];
  }
  return sol;
}

}  // namespace

TransportSolution solve_transportation(const TransportProblem& problem) {
  NetworkSimplex solver(problem);
  return solver.run();
}

}  // namespace fairpost

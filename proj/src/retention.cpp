#include "vigil/retention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace vigil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_nodes(const std::vector<RetentionNode>& nodes) {
  for (const auto& node : nodes) {
    if (!(node.cost > 0.0) || !std::isfinite(node.cost))
      throw Error("re-execution cost must be positive for node " + node.id);
    if (!(node.size > 0.0)) throw Error("state size must be positive for node " + node.id);
    if (!(node.failure_probability >= 0.0 && node.failure_probability <= 1.0))
      throw Error("failure probability must lie in [0, 1] for node " + node.id);
  }
}

std::map<NodeId, std::size_t> index_nodes(const std::vector<RetentionNode>& nodes) {
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!index.emplace(nodes[i].id, i).second) throw Error("duplicate node " + nodes[i].id);
  return index;
}

struct Line {
  long double slope;
  long double intercept;
  std::size_t start;
  long double at(long double x) const { return slope * x + intercept; }
};

/// Lower envelope of lines added in strictly decreasing slope order.
class Envelope {
 public:
  void clear() { lines_.clear(); }
  bool empty() const { return lines_.empty(); }

  void add(Line line) {
    while (lines_.size() >= 2) {
      const Line& a = lines_[lines_.size() - 2];
      const Line& b = lines_.back();
      // b is dominated when the new line overtakes a no later than b does.
      if ((line.intercept - a.intercept) * (a.slope - b.slope) <=
          (b.intercept - a.intercept) * (a.slope - line.slope))
        lines_.pop_back();
      else
        break;
    }
    lines_.push_back(line);
  }

  const Line& query(long double x) const {
    std::size_t lo = 0, hi = lines_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (lines_[mid].at(x) <= lines_[mid + 1].at(x))
        hi = mid;
      else
        lo = mid + 1;
    }
    return lines_[lo];
  }

 private:
  std::vector<Line> lines_;
};

}  // namespace

double chain_recovery_cost(const std::vector<RetentionNode>& chain,
                           const std::set<NodeId>& retained) {
  double total = 0.0;
  double since_restore = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (retained.count(chain[i].id)) since_restore = 0.0;
    since_restore += chain[i].cost;
    total += chain[i].failure_probability * since_restore;
  }
  return total;
}

RetentionPlan optimize_retention(const std::vector<RetentionNode>& chain, std::size_t budget,
                                 const std::set<NodeId>& frontier) {
  check_nodes(chain);
  const auto index = index_nodes(chain);
  if (frontier.size() > budget)
    throw Error("snapshot budget " + std::to_string(budget) + " is smaller than the frontier (" +
                std::to_string(frontier.size()) + ")");
  for (const auto& id : frontier)
    if (!index.count(id)) throw Error("frontier node " + id + " is not in the chain");

  const std::size_t n = chain.size();
  RetentionPlan plan;
  if (n == 0) return plan;
  if (budget >= n) {
    for (const auto& node : chain) plan.retained.insert(node.id);
    plan.expected_cost = chain_recovery_cost(chain, plan.retained);
    return plan;
  }

  // 1-based prefix sums: C = costs, P = probabilities, Q = sum p_i * C(i).
  std::vector<long double> C(n + 1, 0), P(n + 1, 0), Q(n + 1, 0);
  std::vector<bool> forced(n + 1, false);
  for (std::size_t i = 1; i <= n; ++i) {
    C[i] = C[i - 1] + chain[i - 1].cost;
    P[i] = P[i - 1] + chain[i - 1].failure_probability;
    Q[i] = Q[i - 1] + chain[i - 1].failure_probability * C[i];
    forced[i] = frontier.count(chain[i - 1].id) != 0;
  }
  auto segment = [&](std::size_t a, std::size_t b) {
    return Q[b] - Q[a - 1] - C[a - 1] * (P[b] - P[a - 1]);
  };

  // The first segment always starts at node 1 and needs no snapshot.
  const std::size_t starts_budget = budget - (forced[1] ? 1 : 0);
  const std::size_t layers = 1 + std::min(n - 1, starts_budget);

  std::vector<std::vector<long double>> f(layers + 1, std::vector<long double>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> from(layers + 1, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t b = 1; b <= n; ++b) {
    if (b > 1 && forced[b]) break;
    f[1][b] = segment(1, b);
    from[1][b] = 1;
  }
  Envelope hull;
  for (std::size_t k = 2; k <= layers; ++k) {
    hull.clear();
    for (std::size_t b = 2; b <= n; ++b) {
      if (forced[b]) hull.clear();
      if (f[k - 1][b - 1] < kInf) {
        const std::size_t a = b;
        hull.add(Line{-C[a - 1], f[k - 1][a - 1] - Q[a - 1] + C[a - 1] * P[a - 1], a});
      }
      if (hull.empty()) continue;
      const Line& best = hull.query(P[b]);
      f[k][b] = best.at(P[b]) + Q[b];
      from[k][b] = best.start;
    }
  }

  std::size_t best_k = 1;
  for (std::size_t k = 2; k <= layers; ++k)
    if (f[k][n] < f[best_k][n]) best_k = k;
  if (!(f[best_k][n] < kInf)) throw Error("no retention set satisfies the frontier");

  std::size_t b = n;
  for (std::size_t k = best_k; k >= 1 && b >= 1; --k) {
    const std::size_t a = from[k][b];
    if (a > 1) plan.retained.insert(chain[a - 1].id);
    b = a - 1;
    if (k == 1) break;
  }
  if (forced[1] || plan.retained.size() < budget) plan.retained.insert(chain[0].id);
  plan.expected_cost = chain_recovery_cost(chain, plan.retained);
  return plan;
}

double dag_recovery_cost(const GraphTopology& topology, const std::vector<RetentionNode>& nodes,
                         const std::set<NodeId>& retained) {
  const std::size_t n = topology.size();
  if (nodes.size() != n) throw Error("retention inputs do not match the graph");
  std::vector<std::vector<char>> reexec(n, std::vector<char>(n, 0));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    reexec[i][i] = 1;
    if (!retained.count(topology.id_of(i)))
      for (std::size_t parent : topology.parents(i))
        for (std::size_t j = 0; j < n; ++j) reexec[i][j] |= reexec[parent][j];
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (reexec[i][j]) cost += nodes[j].cost;
    total += nodes[i].failure_probability * cost;
  }
  return total;
}

RetentionPlan optimize_retention(const GraphTopology& topology,
                                 const std::vector<RetentionNode>& nodes, std::size_t budget,
                                 const std::set<NodeId>& frontier) {
  check_nodes(nodes);
  const std::size_t n = topology.size();
  if (nodes.size() != n) throw Error("retention inputs do not match the graph");
  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i].id != topology.id_of(i))
      throw Error("retention inputs must follow schedule order");
  if (frontier.size() > budget)
    throw Error("snapshot budget " + std::to_string(budget) + " is smaller than the frontier (" +
                std::to_string(frontier.size()) + ")");

  bool linear = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& parents = topology.parents(i);
    if (i == 0 ? !parents.empty() : (parents.size() != 1 || parents[0] != i - 1)) linear = false;
  }
  if (linear) return optimize_retention(nodes, budget, frontier);

  RetentionPlan plan;
  plan.retained = frontier;
  plan.expected_cost = dag_recovery_cost(topology, nodes, plan.retained);
  while (plan.retained.size() < budget) {
    double best_cost = plan.expected_cost;
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (plan.retained.count(nodes[i].id)) continue;
      auto candidate = plan.retained;
      candidate.insert(nodes[i].id);
      const double cost = dag_recovery_cost(topology, nodes, candidate);
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    if (best == n) break;
    plan.retained.insert(nodes[best].id);
    plan.expected_cost = best_cost;
  }
  return plan;
}

}  // namespace vigil

#pragma once

// Communication graphs, consensus weight matrices and their stationary vector.
//
// Edge (j, i) means node j sends its estimate to node i. The weight a_ij
// multiplies x_j in node i's average, so weights live on in-edges. Node
// indices are 0-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "setmember/error.hpp"

namespace setmember {

class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;  // (from, to)

  explicit Graph(std::size_t node_count, std::set<Edge> edges = {})
      : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ < 1) throw InvalidSize("graph needs at least one node");
    for (const auto& [from, to] : edges_) {
      if (from >= node_count_ || to >= node_count_) {
        throw InvalidArgument("edge (" + std::to_string(from) + "," + std::to_string(to) +
                              ") references a node outside [0, " +
                              std::to_string(node_count_) + ")");
      }
      if (from == to) throw InvalidArgument("self-loops are implicit and must not be stored");
    }
  }

  std::size_t node_count() const noexcept { return node_count_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  bool has_edge(std::size_t from, std::size_t to) const { return edges_.count({from, to}) > 0; }

  std::vector<std::size_t> in_neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& [from, to] : edges_) {
      if (to == i) out.push_back(from);
    }
    return out;
  }

  std::size_t in_degree(std::size_t i) const { return in_neighbors(i).size(); }

  bool is_symmetric() const {
    return std::all_of(edges_.begin(), edges_.end(),
                       [&](const Edge& e) { return has_edge(e.second, e.first); });
  }

  /// Every node reaches every other node along directed edges.
  bool is_strongly_connected() const {
    auto reaches_all = [&](bool forward) {
      std::vector<std::vector<std::size_t>> adj(node_count_);
      for (const auto& [from, to] : edges_) {
        if (forward) adj[from].push_back(to);
        else adj[to].push_back(from);
      }
      std::vector<bool> seen(node_count_, false);
      std::vector<std::size_t> stack{0};
      seen[0] = true;
      std::size_t count = 1;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adj[u]) {
          if (!seen[v]) {
            seen[v] = true;
            ++count;
            stack.push_back(v);
          }
        }
      }
      return count == node_count_;
    };
    return reaches_all(true) && reaches_all(false);
  }

 private:
  std::size_t node_count_;
  std::set<Edge> edges_;
};

/// Directed cycle 0 -> 1 -> ... -> N-1 -> 0, optionally with reversed edges.
inline Graph build_ring(std::size_t n, bool bidirectional) {
  if (n < 2) throw InvalidSize("ring needs N >= 2");
  if (bidirectional && n < 3) throw InvalidSize("bidirectional ring needs N >= 3");
  std::set<Graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1) % n;
    edges.insert({i, next});
    if (bidirectional) edges.insert({next, i});
  }
  return Graph(n, std::move(edges));
}

inline Graph build_complete(std::size_t n) {
  if (n < 2) throw InvalidSize("complete graph needs N >= 2");
  std::set<Graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) edges.insert({j, i});
    }
  }
  return Graph(n, std::move(edges));
}

/// Square matrix of consensus weights, row-major.
class WeightMatrix {
 public:
  explicit WeightMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {
    if (n < 1) throw InvalidSize("weight matrix needs N >= 1");
  }

  WeightMatrix(std::size_t n, std::vector<double> row_major) : n_(n), a_(std::move(row_major)) {
    if (n < 1) throw InvalidSize("weight matrix needs N >= 1");
    if (a_.size() != n * n) throw InvalidSize("weight matrix entries do not form an N x N matrix");
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const std::vector<double>& entries() const noexcept { return a_; }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// a_ij = 1 / (d_i + 1) for every in-neighbor j of i and for j = i.
inline WeightMatrix weights_neighbor_average(const Graph& g) {
  const std::size_t n = g.node_count();
  WeightMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = g.in_neighbors(i);
    const double w = 1.0 / static_cast<double>(nbrs.size() + 1);
    a(i, i) = w;
    for (std::size_t j : nbrs) a(i, j) = w;
  }
  return a;
}

/// Metropolis-Hastings weights on a symmetric graph; doubly stochastic.
inline WeightMatrix weights_metropolis(const Graph& g) {
  if (!g.is_symmetric()) throw AsymmetricGraph("metropolis weights need a symmetric graph");
  const std::size_t n = g.node_count();
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = g.in_degree(i);
  WeightMatrix a(n);
  for (const auto& [j, i] : g.edges()) {
    a(i, j) = 1.0 / static_cast<double>(1 + std::max(degree[i], degree[j]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off += a(i, j);
    }
    a(i, i) = 1.0 - off;
  }
  return a;
}

/// Maximum-degree weights on a symmetric graph; doubly stochastic.
inline WeightMatrix weights_max_degree(const Graph& g) {
  if (!g.is_symmetric()) throw AsymmetricGraph("max-degree weights need a symmetric graph");
  const std::size_t n = g.node_count();
  std::size_t d_max = 0;
  for (std::size_t i = 0; i < n; ++i) d_max = std::max(d_max, g.in_degree(i));
  const double w = 1.0 / static_cast<double>(d_max + 1);
  WeightMatrix a(n);
  for (const auto& [j, i] : g.edges()) a(i, j) = w;
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0 - static_cast<double>(g.in_degree(i)) * w;
  }
  return a;
}

/// Outcome of checking a weight matrix against its graph.
struct WeightReport {
  bool nonnegative = true;
  bool positive_diagonal = true;
  bool row_stochastic = true;
  bool graph_compatible = true;
  bool strongly_connected = true;
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

inline constexpr double kRowSumTol = 1e-12;

/// Checks nonnegativity, positive diagonal, unit row sums, sparsity matching
/// the graph's in-edges, and strong connectivity of the graph.
inline WeightReport validate_weights(const Graph& g, const WeightMatrix& a) {
  if (g.node_count() != a.size()) {
    throw DimensionMismatch("graph has " + std::to_string(g.node_count()) +
                            " nodes, weight matrix is " + std::to_string(a.size()) + " x " +
                            std::to_string(a.size()));
  }
  WeightReport r;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = a(i, j);
      if (!(w >= 0.0)) r.nonnegative = false;
      row += w;
      if (i != j && ((w > 0.0) != g.has_edge(j, i))) r.graph_compatible = false;
    }
    if (!(a(i, i) > 0.0)) r.positive_diagonal = false;
    if (!(std::abs(row - 1.0) <= kRowSumTol)) r.row_stochastic = false;
  }
  r.strongly_connected = g.is_strongly_connected();
  if (!r.nonnegative) r.violations.emplace_back("nonnegative");
  if (!r.positive_diagonal) r.violations.emplace_back("positive diagonal");
  if (!r.row_stochastic) r.violations.emplace_back("row-stochastic");
  if (!r.graph_compatible) r.violations.emplace_back("graph-compatible");
  if (!r.strongly_connected) r.violations.emplace_back("strongly connected");
  return r;
}

inline constexpr double kStationaryTol = 1e-10;
inline constexpr std::size_t kStationaryMaxIter = 100000;

/// Positive left eigenvector of A for eigenvalue 1, normalized to sum 1.
/// Power iteration on A'; stops when ||v'A - v'||_inf <= tol.
inline std::vector<double> stationary_vector(const WeightMatrix& a, double tol = kStationaryTol,
                                             std::size_t max_iter = kStationaryMaxIter) {
  const std::size_t n = a.size();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  auto left_multiply = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[j] += in[i] * a(i, j);
    }
  };
  for (std::size_t it = 0; it < max_iter; ++it) {
    left_multiply(v, next);
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) residual = std::max(residual, std::abs(next[j] - v[j]));
    if (residual <= tol) return v;
    double sum = 0.0;
    for (double x : next) sum += x;
    for (std::size_t j = 0; j < n; ++j) v[j] = next[j] / sum;
  }
  throw NoConvergence("stationary vector power iteration hit the iteration cap");
}

}  // namespace setmember

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphot/error.hpp"

namespace graphot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Oriented edge of E': tail < head, so the flow sign convention is
/// "positive means mass moves from tail to head".
struct Edge {
  int tail = 0;
  int head = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One entry of a vertex's neighbor list.
struct Incidence {
  int neighbor = 0;
  int edge = 0;  // index into WeightedGraph::edges()
  double weight = 1.0;
};

/// Undirected, connected, positively weighted simple graph with a fixed
/// lexicographic orientation of its edges. Immutable after construction.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Validates and canonicalizes an edge list on vertices [0, n).
  /// Edges may be given in either orientation; they are stored as (i, j)
  /// with i < j, sorted lexicographically.
  static WeightedGraph build(int n, std::vector<Edge> edges) {
    detail::require(n >= 1, ErrorCode::kInvalidArgument, "graph needs at least one vertex");
    for (auto& e : edges) {
      detail::require(e.tail >= 0 && e.tail < n && e.head >= 0 && e.head < n,
                      ErrorCode::kIndexOutOfRange,
                      "edge (" + std::to_string(e.tail) + ", " + std::to_string(e.head) +
                          ") outside [0, " + std::to_string(n) + ")");
      detail::require(e.tail != e.head, ErrorCode::kSelfLoop,
                      "self-loop at vertex " + std::to_string(e.tail));
      detail::require(std::isfinite(e.weight) && e.weight > 0.0, ErrorCode::kNonpositiveWeight,
                      "edge (" + std::to_string(e.tail) + ", " + std::to_string(e.head) +
                          ") has weight " + std::to_string(e.weight));
      if (e.tail > e.head) std::swap(e.tail, e.head);
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.tail, a.head) < std::pair(b.tail, b.head);
    });
    for (std::size_t k = 1; k < edges.size(); ++k) {
      detail::require(!(edges[k].tail == edges[k - 1].tail && edges[k].head == edges[k - 1].head),
                      ErrorCode::kDuplicateEdge,
                      "edge (" + std::to_string(edges[k].tail) + ", " +
                          std::to_string(edges[k].head) + ") listed twice");
    }

    WeightedGraph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.degree_.assign(n, 0.0);
    g.offsets_.assign(n + 1, 0);
    for (const auto& e : g.edges_) {
      g.degree_[e.tail] += e.weight;
      g.degree_[e.head] += e.weight;
      ++g.offsets_[e.tail + 1];
      ++g.offsets_[e.head + 1];
    }
    for (int i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.adjacency_.resize(2 * g.edges_.size());
    std::vector<int> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (int k = 0; k < static_cast<int>(g.edges_.size()); ++k) {
      const auto& e = g.edges_[k];
      g.adjacency_[fill[e.tail]++] = {e.head, k, e.weight};
      g.adjacency_[fill[e.head]++] = {e.tail, k, e.weight};
    }
    g.volume_ = 0.0;
    for (double d : g.degree_) g.volume_ += d;

    const int components = g.count_components();
    detail::require(components == 1, ErrorCode::kDisconnected,
                    "graph has " + std::to_string(components) + " connected components");
    return g;
  }

  /// Infers n as one past the largest vertex index.
  static WeightedGraph build(std::vector<Edge> edges) {
    int n = 0;
    for (const auto& e : edges) n = std::max({n, e.tail + 1, e.head + 1});
    return build(std::max(n, 1), std::move(edges));
  }

  int num_vertices() const noexcept { return n_; }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(int k) const { return edges_.at(k); }
  double degree(int i) const { return degree_.at(i); }
  const std::vector<double>& degrees() const noexcept { return degree_; }
  double volume() const noexcept { return volume_; }

  std::span<const Incidence> neighbors(int i) const {
    return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
  }

  /// Index of edge {i, j} in E', or -1.
  int find_edge(int i, int j) const {
    for (const auto& inc : neighbors(i)) {
      if (inc.neighbor == j) return inc.edge;
    }
    return -1;
  }

  bool is_unit_weighted() const noexcept {
    return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.weight == 1.0; });
  }

  double min_weight() const noexcept {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) w = std::min(w, e.weight);
    return w;
  }

  double max_weight() const noexcept {
    double w = 0.0;
    for (const auto& e : edges_) w = std::max(w, e.weight);
    return w;
  }

  Vector weights() const {
    Vector w(num_edges());
    for (int k = 0; k < num_edges(); ++k) w[k] = edges_[k].weight;
    return w;
  }

  bool is_tree() const noexcept { return num_edges() == n_ - 1; }

  /// True for the unweighted path 0 - 1 - ... - (n-1).
  bool is_unit_path() const noexcept {
    if (num_edges() != n_ - 1) return false;
    for (int k = 0; k < num_edges(); ++k) {
      if (edges_[k].tail != k || edges_[k].head != k + 1 || edges_[k].weight != 1.0) return false;
    }
    return true;
  }

 private:
  int count_components() const {
    std::vector<int> seen(n_, 0);
    int components = 0;
    std::vector<int> stack;
    for (int s = 0; s < n_; ++s) {
      if (seen[s]) continue;
      ++components;
      seen[s] = 1;
      stack.push_back(s);
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& inc : neighbors(u)) {
          if (!seen[inc.neighbor]) {
            seen[inc.neighbor] = 1;
            stack.push_back(inc.neighbor);
          }
        }
      }
    }
    return components;
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> degree_;
  std::vector<int> offsets_;
  std::vector<Incidence> adjacency_;
  double volume_ = 0.0;
};

inline WeightedGraph build_graph(int n, std::vector<Edge> edges) {
  return WeightedGraph::build(n, std::move(edges));
}

namespace detail {

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
  require(got == want, ErrorCode::kDimensionMismatch,
          std::string(what) + " has length " + std::to_string(got) + ", expected " +
              std::to_string(want));
}

}  // namespace detail

/// (BJ)(i): net outflow of an edge flow at each vertex.
inline Vector divergence(const WeightedGraph& g, const Vector& flow) {
  detail::require_size(flow.size(), g.num_edges(), "edge flow");
  Vector out = Vector::Zero(g.num_vertices());
  for (int k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    out[e.tail] += flow[k];
    out[e.head] -= flow[k];
  }
  return out;
}

/// (Bᵀf)(i, j) = f(i) - f(j) over E'.
inline Vector gradient(const WeightedGraph& g, const Vector& f) {
  detail::require_size(f.size(), g.num_vertices(), "vertex function");
  Vector out(g.num_edges());
  for (int k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    out[k] = f[e.tail] - f[e.head];
  }
  return out;
}

/// (Lf)(i) = Σ_{j~i} (f(i) - f(j)) w_ij, evaluated matrix-free.
inline Vector laplacian_apply(const WeightedGraph& g, const Vector& f) {
  detail::require_size(f.size(), g.num_vertices(), "vertex function");
  Vector out = Vector::Zero(g.num_vertices());
  for (const auto& e : g.edges()) {
    const double flux = (f[e.tail] - f[e.head]) * e.weight;
    out[e.tail] += flux;
    out[e.head] -= flux;
  }
  return out;
}

/// Dense B diag(conductance) Bᵀ for an arbitrary per-edge conductance.
inline Matrix weighted_laplacian(const WeightedGraph& g, const Vector& conductance) {
  detail::require_size(conductance.size(), g.num_edges(), "edge conductance");
  Matrix lap = Matrix::Zero(g.num_vertices(), g.num_vertices());
  for (int k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    const double c = conductance[k];
    lap(e.tail, e.tail) += c;
    lap(e.head, e.head) += c;
    lap(e.tail, e.head) -= c;
    lap(e.head, e.tail) -= c;
  }
  return lap;
}

inline Matrix dense_laplacian(const WeightedGraph& g) { return weighted_laplacian(g, g.weights()); }

inline Matrix dense_incidence(const WeightedGraph& g) {
  Matrix b = Matrix::Zero(g.num_vertices(), g.num_edges());
  for (int k = 0; k < g.num_edges(); ++k) {
    b(g.edge(k).tail, k) = 1.0;
    b(g.edge(k).head, k) = -1.0;
  }
  return b;
}

/// ‖J‖_{w,p} = (Σ |J_e|^p w_e)^{1/p}.
inline double weighted_norm(const WeightedGraph& g, const Vector& flow, double p) {
  detail::require_size(flow.size(), g.num_edges(), "edge flow");
  double acc = 0.0;
  for (int k = 0; k < g.num_edges(); ++k) acc += std::pow(std::abs(flow[k]), p) * g.edge(k).weight;
  return std::pow(acc, 1.0 / p);
}

/// Weighted p-shortest-path metric d_p together with one minimizing path
/// per pair (predecessor tree per source).
class PathMetric {
 public:
  PathMetric() = default;
  PathMetric(double p, Matrix dist, std::vector<std::vector<int>> predecessor)
      : p_(p), dist_(std::move(dist)), pred_(std::move(predecessor)) {}

  double p() const noexcept { return p_; }
  const Matrix& matrix() const noexcept { return dist_; }
  double operator()(int i, int j) const { return dist_(i, j); }
  int size() const noexcept { return static_cast<int>(dist_.rows()); }

  /// Vertices of the stored shortest path from i to j, inclusive.
  std::vector<int> path(int i, int j) const {
    std::vector<int> out{j};
    while (out.back() != i) out.push_back(pred_.at(i).at(out.back()));
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  double p_ = 1.0;
  Matrix dist_;
  std::vector<std::vector<int>> pred_;
};

/// All-pairs d_p via Dijkstra on transformed weights w^p, then a p-th root.
/// Ties between equal-length paths go to the lower predecessor index.
inline PathMetric shortest_path_metric(const WeightedGraph& g, double p) {
  detail::require(p >= 1.0 && std::isfinite(p), ErrorCode::kInvalidArgument,
                  "shortest_path_metric needs p >= 1");
  const int n = g.num_vertices();
  Matrix dist(n, n);
  std::vector<std::vector<int>> pred(n, std::vector<int>(n, -1));
  using Item = std::pair<double, int>;
  for (int s = 0; s < n; ++s) {
    std::vector<double> d(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    d[s] = 0.0;
    pred[s][s] = s;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      auto [du, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      for (const auto& inc : g.neighbors(u)) {
        const double cand = du + std::pow(inc.weight, p);
        const int v = inc.neighbor;
        if (cand < d[v] || (cand == d[v] && !done[v] && u < pred[s][v])) {
          d[v] = cand;
          pred[s][v] = u;
          heap.emplace(cand, v);
        }
      }
    }
    for (int t = 0; t < n; ++t) dist(s, t) = (p == 1.0) ? d[t] : std::pow(d[t], 1.0 / p);
  }
  // Summation order differs between the two sources; pin exact symmetry.
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) dist(t, s) = dist(s, t);
  }
  return PathMetric(p, std::move(dist), std::move(pred));
}

}  // namespace graphot

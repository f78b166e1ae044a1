#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"
#include "graphot/spectral.hpp"

namespace graphot {

/// Signed values on the oriented edges E'.
struct EdgeFlow {
  Vector values;
  double residual = 0.0;  // ‖BJ − (α−β)‖_∞
};

struct BeckmannSolution {
  double p = 2.0;
  double distance = 0.0;
  EdgeFlow flow;
  Vector potential;  // dual witness φ; empty when not available
  double duality_gap = 0.0;
  int iterations = 0;
};

/// ‖Bᵀφ‖_{w^{1−q},q}, the dual norm constraining φ. For p = 1 this is the
/// Lipschitz seminorm max |φ(i) − φ(j)| / w_ij.
inline double dual_norm(const WeightedGraph& g, const Vector& phi, double p) {
  const Vector grad = gradient(g, phi);
  if (p == 1.0) {
    double best = 0.0;
    for (int k = 0; k < g.num_edges(); ++k) best = std::max(best, std::abs(grad[k]) / g.edge(k).weight);
    return best;
  }
  const double q = p / (p - 1.0);
  double acc = 0.0;
  for (int k = 0; k < g.num_edges(); ++k) {
    acc += std::pow(std::abs(grad[k]), q) * std::pow(g.edge(k).weight, 1.0 - q);
  }
  return std::pow(acc, 1.0 / q);
}

/// φᵀ(α−β) after scaling φ onto the dual unit ball if it lies outside.
/// Always a lower bound on B_p(α, β).
inline double dual_value(const WeightedGraph& g, const Vector& phi, const Measure& a,
                         const Measure& b, double p) {
  detail::require(p >= 1.0, ErrorCode::kInvalidArgument, "p must be >= 1");
  const Vector d = mass_difference(g.num_vertices(), a, b);
  detail::require_size(phi.size(), g.num_vertices(), "potential");
  const double norm = dual_norm(g, phi, p);
  const double value = phi.dot(d);
  if (norm <= 1.0 + 1e-9) return value;
  return value / norm;
}

namespace detail {

inline double feasibility_residual(const WeightedGraph& g, const Vector& flow, const Vector& d) {
  return (divergence(g, flow) - d).cwiseAbs().maxCoeff();
}

inline BeckmannSolution zero_solution(const WeightedGraph& g, double p) {
  BeckmannSolution out;
  out.p = p;
  out.flow.values = Vector::Zero(g.num_edges());
  out.potential = Vector::Zero(g.num_vertices());
  return out;
}

/// Solves B diag(c) Bᵀ x = rhs with x(0) = 0. rhs must sum to zero.
inline Vector solve_grounded(const WeightedGraph& g, const Vector& conductance, const Vector& rhs) {
  const int n = g.num_vertices();
  Vector x = Vector::Zero(n);
  if (n == 1) return x;
  const Matrix lap = weighted_laplacian(g, conductance);
  Eigen::LDLT<Matrix> ldlt(lap.bottomRightCorner(n - 1, n - 1));
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularSystem, "grounded Laplacian factorization failed");
  }
  x.tail(n - 1) = ldlt.solve(rhs.tail(n - 1));
  return x;
}

}  // namespace detail

/// B₂ through the Laplacian pseudoinverse: flow = C Bᵀ L†(α−β) with C the
/// edge conductances of s. With transport-kind spectral data this is the
/// exact minimizer of Σ w J². Conductance-kind data is accepted only when
/// all weights are 1, where the two Laplacians coincide.
inline BeckmannSolution beckmann_p2(const SpectralData& s, const Measure& a, const Measure& b) {
  const WeightedGraph& g = s.graph();
  const Vector d = mass_difference(g.num_vertices(), a, b);
  detail::require(s.kind() == LaplacianKind::kResistance || g.is_unit_weighted(),
                  ErrorCode::kWeightRoleMismatch,
                  "B2 on a weighted graph needs the resistance-kind Laplacian (decompose_transport)");
  if (a.mass() == b.mass()) return detail::zero_solution(g, 2.0);

  const Vector f = pinv_apply(s, d);
  const Vector grad = gradient(g, f);
  BeckmannSolution out;
  out.p = 2.0;
  out.flow.values = s.conductances().cwiseProduct(grad);
  out.flow.residual = detail::feasibility_residual(g, out.flow.values, d);
  out.distance = weighted_norm(g, out.flow.values, 2.0);
  const double scale = dual_norm(g, f, 2.0);
  out.potential = scale > 0.0 ? Vector(f / scale) : Vector::Zero(g.num_vertices());
  out.duality_gap = std::max(0.0, out.distance - out.potential.dot(d));
  return out;
}

/// B₁ as an exact min-cost transshipment: successive shortest paths with
/// Dijkstra on reduced costs. Crossing edge e costs +w_e, or −w_e (capacity
/// |J_e|) when it cancels flow already on e. The returned potential is the
/// Lipschitz dual witness.
inline BeckmannSolution beckmann_p1(const WeightedGraph& g, const Measure& a, const Measure& b) {
  const int n = g.num_vertices();
  const Vector d = mass_difference(n, a, b);
  if (a.mass() == b.mass()) return detail::zero_solution(g, 1.0);

  constexpr double kMassTol = 1e-14;
  const double inf = std::numeric_limits<double>::infinity();
  Vector flow = Vector::Zero(g.num_edges());
  Vector excess = d;
  std::vector<double> pi(n, 0.0);
  std::vector<double> dist(n);
  std::vector<int> pred_edge(n), pred_vertex(n);
  std::vector<char> done(n);
  int augmentations = 0;

  // Cost and residual capacity of moving mass u → v across edge k.
  auto arc = [&](int u, int k) -> std::pair<double, double> {
    const Edge& e = g.edge(k);
    const double sign = (u == e.tail) ? 1.0 : -1.0;  // +1 increases J_k
    if (sign * flow[k] < 0.0) return {-e.weight, std::abs(flow[k])};
    return {e.weight, inf};
  };

  for (;;) {
    int source = -1;
    for (int i = 0; i < n; ++i) {
      if (excess[i] > kMassTol) {
        source = i;
        break;
      }
    }
    if (source < 0) break;

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    std::fill(pred_edge.begin(), pred_edge.end(), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      for (const auto& inc : g.neighbors(u)) {
        const auto [cost, cap] = arc(u, inc.edge);
        if (cap <= 0.0) continue;
        const double reduced = std::max(0.0, cost + pi[u] - pi[inc.neighbor]);
        const double cand = du + reduced;
        const int v = inc.neighbor;
        if (cand < dist[v]) {
          dist[v] = cand;
          pred_edge[v] = inc.edge;
          pred_vertex[v] = u;
          heap.emplace(cand, v);
        }
      }
    }

    int target = -1;
    for (int i = 0; i < n; ++i) {
      if (excess[i] < -kMassTol && (target < 0 || dist[i] < dist[target])) target = i;
    }
    if (target < 0) break;  // leftover excess is rounding noise
    for (int i = 0; i < n; ++i) pi[i] += dist[i];

    double amount = std::min(excess[source], -excess[target]);
    for (int v = target; v != source; v = pred_vertex[v]) {
      amount = std::min(amount, arc(pred_vertex[v], pred_edge[v]).second);
    }
    for (int v = target; v != source; v = pred_vertex[v]) {
      const int k = pred_edge[v];
      const double sign = (pred_vertex[v] == g.edge(k).tail) ? 1.0 : -1.0;
      const double before = flow[k];
      flow[k] += sign * amount;
      // Exact cancellation when the cap was binding.
      if (before != 0.0 && std::abs(flow[k]) <= 1e-15 * std::abs(before)) flow[k] = 0.0;
    }
    excess[source] -= amount;
    excess[target] += amount;
    if (++augmentations > 100 * (n + g.num_edges()) + 1000) {
      throw Error(ErrorCode::kNoConvergence, "min-cost flow exceeded its augmentation cap");
    }
  }

  BeckmannSolution out;
  out.p = 1.0;
  out.flow.values = flow;
  out.flow.residual = detail::feasibility_residual(g, flow, d);
  out.distance = weighted_norm(g, flow, 1.0);
  out.potential = Vector(n);
  for (int i = 0; i < n; ++i) out.potential[i] = -pi[i];
  out.potential.array() -= out.potential.mean();
  out.duality_gap = std::max(0.0, out.distance - dual_value(g, out.potential, a, b, 1.0));
  out.iterations = augmentations;
  return out;
}

struct GeneralSolverOptions {
  int max_steps = 500;
  double eps_start = 1e-3;
  double eps_floor = 1e-12;
  double target_gap = 1e-10;  // relative, stop as soon as reached
  double accept_gap = 1e-8;   // relative, required on exit
};

namespace detail {

/// Dual witness from the optimality condition w|J|^{p−1}sign J ∈ range(Bᵀ):
/// least-squares potential of that edge field, scaled to the dual unit ball.
inline Vector flow_certificate(const WeightedGraph& g, const Vector& flow, double p) {
  Vector field(g.num_edges());
  for (int k = 0; k < g.num_edges(); ++k) {
    field[k] = g.edge(k).weight * std::pow(std::abs(flow[k]), p - 1.0) * (flow[k] < 0 ? -1.0 : 1.0);
  }
  Vector f = solve_grounded(g, Vector::Ones(g.num_edges()), divergence(g, field));
  f.array() -= f.mean();
  const double scale = dual_norm(g, f, p);
  return scale > 0.0 ? Vector(f / scale) : Vector::Zero(g.num_vertices());
}

}  // namespace detail

/// B_p for 1 < p < ∞ by damped Newton-weighted IRLS on the smoothed
/// objective Σ w (J² + ε²)^{p/2}, with ε continuation and a duality-gap
/// stopping rule.
inline BeckmannSolution beckmann_general(const WeightedGraph& g, const Measure& a,
                                         const Measure& b, double p,
                                         const GeneralSolverOptions& opt = {}) {
  detail::require(p > 1.0 && std::isfinite(p), ErrorCode::kInvalidArgument,
                  "beckmann_general needs 1 < p < inf");
  const int n = g.num_vertices();
  const int m = g.num_edges();
  const Vector d = mass_difference(n, a, b);
  if (a.mass() == b.mass()) return detail::zero_solution(g, p);

  const Vector w = g.weights();
  Vector flow = gradient(g, detail::solve_grounded(g, Vector::Ones(m), d));
  double eps = opt.eps_start;

  auto smoothed = [&](const Vector& j) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += w[k] * std::pow(j[k] * j[k] + eps * eps, 0.5 * p);
    return acc;
  };

  BeckmannSolution best;
  best.p = p;
  best.duality_gap = std::numeric_limits<double>::infinity();
  // Candidate potentials: the Newton multiplier of the last step (its
  // gradient matches the smoothed optimality condition) and the
  // least-squares fit of the exact one. The better dual value wins.
  Vector multiplier;
  auto certify = [&](int steps) {
    const double dist = weighted_norm(g, flow, p);
    Vector phi = detail::flow_certificate(g, flow, p);
    if (multiplier.size() == n) {
      const double scale = dual_norm(g, multiplier, p);
      if (scale > 0.0) {
        Vector alt = multiplier / scale;
        alt.array() -= alt.mean();
        if (alt.dot(d) > phi.dot(d)) phi = std::move(alt);
      }
    }
    const double gap = std::max(0.0, dist - phi.dot(d));
    if (gap < best.duality_gap) {
      best.distance = dist;
      best.flow.values = flow;
      best.potential = phi;
      best.duality_gap = gap;
    }
    best.iterations = steps;
    return gap <= opt.target_gap * std::max(1.0, dist);
  };

  Vector grad(m), hinv(m);
  int steps = 0;
  bool done = certify(0);
  while (!done && steps < opt.max_steps) {
    ++steps;
    for (int k = 0; k < m; ++k) {
      const double s2 = flow[k] * flow[k] + eps * eps;
      grad[k] = p * w[k] * std::pow(s2, 0.5 * p - 1.0) * flow[k];
      const double h = p * w[k] * std::pow(s2, 0.5 * p - 2.0) * ((p - 1.0) * flow[k] * flow[k] + eps * eps);
      hinv[k] = 1.0 / h;
    }
    const Vector r = d - divergence(g, flow);
    const Vector rhs = r + divergence(g, hinv.cwiseProduct(grad));
    const Vector lambda = detail::solve_grounded(g, hinv, rhs);
    multiplier = lambda;
    const Vector step = hinv.cwiseProduct(gradient(g, lambda) - grad);

    const double f0 = smoothed(flow);
    const double slope = grad.dot(step);
    double theta = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving, theta *= 0.5) {
      const Vector trial = flow + theta * step;
      if (smoothed(trial) <= f0 + 1e-4 * theta * std::min(0.0, slope)) {
        flow = trial;
        accepted = true;
        break;
      }
    }
    done = certify(steps);
    if (done) break;
    // Newton decrement small (or no progress): tighten the smoothing.
    const bool stalled = !accepted || -slope <= 1e-9 * f0;
    if (stalled) {
      if (eps <= opt.eps_floor && !accepted) break;
      eps = std::max(0.5 * eps, opt.eps_floor);
    }
  }

  if (!(best.duality_gap <= opt.accept_gap * std::max(1.0, best.distance))) {
    throw Error(ErrorCode::kNoConvergence,
                "IRLS stopped after " + std::to_string(best.iterations) +
                    " steps with duality gap " + std::to_string(best.duality_gap));
  }
  best.flow.residual = detail::feasibility_residual(g, best.flow.values, d);
  return best;
}

/// Dispatches on p: min-cost flow at p = 1, IRLS otherwise.
inline BeckmannSolution beckmann(const WeightedGraph& g, const Measure& a, const Measure& b,
                                 double p) {
  return p == 1.0 ? beckmann_p1(g, a, b) : beckmann_general(g, a, b, p);
}

/// Path chosen for the ordered pair (i, j), listed i … j.
using PathChooser = std::function<std::vector<int>(int, int)>;

/// J^π = Σ_{i≠j} π_ij I_{P_ij}, accumulated per direction on E'' and folded
/// to E' as J(i,j) = J''(i,j) − J''(j,i).
inline EdgeFlow coupling_to_flow(const WeightedGraph& g, const Matrix& pi, const PathChooser& paths) {
  const int n = g.num_vertices();
  detail::require(pi.rows() == n && pi.cols() == n, ErrorCode::kInvalidCoupling,
                  "coupling must be n×n");
  detail::require(pi.minCoeff() >= -1e-12, ErrorCode::kInvalidCoupling, "negative coupling entry");
  detail::require(std::abs(pi.sum() - 1.0) <= 1e-9, ErrorCode::kInvalidCoupling,
                  "coupling mass is not 1");
  Vector forward = Vector::Zero(g.num_edges());
  Vector backward = Vector::Zero(g.num_edges());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || pi(i, j) <= 0.0) continue;
      const std::vector<int> path = paths(i, j);
      detail::require(path.size() >= 2 && path.front() == i && path.back() == j,
                      ErrorCode::kPathNotConnectingPair,
                      "path for (" + std::to_string(i) + ", " + std::to_string(j) + ") has wrong endpoints");
      for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        const int u = path[s];
        const int v = path[s + 1];
        detail::require(u >= 0 && u < n && v >= 0 && v < n, ErrorCode::kPathNotConnectingPair,
                        "path leaves the vertex set");
        const int k = g.find_edge(u, v);
        detail::require(k >= 0, ErrorCode::kPathNotConnectingPair,
                        "path step (" + std::to_string(u) + ", " + std::to_string(v) + ") is not an edge");
        (u < v ? forward : backward)[k] += pi(i, j);
      }
    }
  }
  EdgeFlow out;
  out.values = forward - backward;
  out.residual = (divergence(g, out.values) - (pi.rowwise().sum() - pi.colwise().sum().transpose()))
                     .cwiseAbs()
                     .maxCoeff();
  return out;
}

inline EdgeFlow coupling_to_flow(const WeightedGraph& g, const Matrix& pi, const PathMetric& metric) {
  return coupling_to_flow(g, pi, [&](int i, int j) { return metric.path(i, j); });
}

/// Σ_{i≠j} π_ij ‖I_{P_ij}‖_{w,p}: the triangle-inequality bound on ‖J^π‖_{w,p}.
inline double coupling_path_cost(const WeightedGraph& g, const Matrix& pi, const PathChooser& paths,
                                 double p) {
  double acc = 0.0;
  for (int i = 0; i < pi.rows(); ++i) {
    for (int j = 0; j < pi.cols(); ++j) {
      if (i == j || pi(i, j) <= 0.0) continue;
      const std::vector<int> path = paths(i, j);
      double len = 0.0;
      for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        len += g.edge(g.find_edge(path[s], path[s + 1])).weight;
      }
      acc += pi(i, j) * std::pow(len, 1.0 / p);
    }
  }
  return acc;
}

/// Edge cdf on the unweighted path: K(i, i+1) = Σ_{j ≤ i} mass(j).
inline Vector path_edge_cdf(const Measure& a) {
  Vector k(std::max(0, a.size() - 1));
  double acc = 0.0;
  for (int i = 0; i + 1 < a.size(); ++i) {
    acc += a[i];
    k[i] = acc;
  }
  return k;
}

inline double beckmann_path_closed_form(const Measure& a, const Measure& b, double p) {
  detail::require_size(b.size(), a.size(), "second measure");
  detail::require(p >= 1.0, ErrorCode::kInvalidArgument, "p must be >= 1");
  const Vector gap = path_edge_cdf(a) - path_edge_cdf(b);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < gap.size(); ++k) acc += std::pow(std::abs(gap[k]), p);
  return std::pow(acc, 1.0 / p);
}

inline double beckmann_path_closed_form(const WeightedGraph& g, const Measure& a, const Measure& b,
                                        double p) {
  detail::require(g.is_unit_path(), ErrorCode::kNotAPath, "graph is not the unweighted path 0-1-...-(n-1)");
  detail::require_size(a.size(), g.num_vertices(), "first measure");
  return beckmann_path_closed_form(a, b, p);
}

/// The unique feasible flow on a tree: for edge (i, j) ∈ E', the α−β mass
/// on i's side once the edge is removed.
inline Vector tree_flow(const WeightedGraph& t, const Measure& a, const Measure& b) {
  detail::require(t.is_tree(), ErrorCode::kNotATree, "graph is not a tree");
  const int n = t.num_vertices();
  const Vector d = mass_difference(n, a, b);
  std::vector<int> parent(n, -1), order;
  order.reserve(n);
  order.push_back(0);
  parent[0] = 0;
  for (std::size_t h = 0; h < order.size(); ++h) {
    for (const auto& inc : t.neighbors(order[h])) {
      if (parent[inc.neighbor] < 0) {
        parent[inc.neighbor] = order[h];
        order.push_back(inc.neighbor);
      }
    }
  }
  Vector subtree = d;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (*it != 0) subtree[parent[*it]] += subtree[*it];
  }
  Vector flow(t.num_edges());
  for (int k = 0; k < t.num_edges(); ++k) {
    const Edge& e = t.edge(k);
    // Side of the tail: the head's subtree complement, or the tail's subtree.
    flow[k] = parent[e.head] == e.tail ? -subtree[e.head] : subtree[e.tail];
  }
  return flow;
}

inline double beckmann_tree_closed_form(const WeightedGraph& t, const Measure& a, const Measure& b,
                                        double p) {
  detail::require(p >= 1.0, ErrorCode::kInvalidArgument, "p must be >= 1");
  return weighted_norm(t, tree_flow(t, a, b), p);
}

}  // namespace graphot

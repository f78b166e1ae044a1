#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"

namespace graphot {

inline WeightedGraph path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return build_graph(n, std::move(edges));
}

inline WeightedGraph cycle_graph(int n) {
  detail::require(n >= 3, ErrorCode::kInvalidArgument, "a cycle needs at least 3 vertices");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return build_graph(n, std::move(edges));
}

inline WeightedGraph complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  }
  return build_graph(n, std::move(edges));
}

inline WeightedGraph star_graph(int leaves) {
  std::vector<Edge> edges;
  for (int i = 1; i <= leaves; ++i) edges.push_back({0, i, 1.0});
  return build_graph(leaves + 1, std::move(edges));
}

/// rows × cols grid, vertex r·cols + c, 4-neighbor unit edges.
inline WeightedGraph lattice_graph(int rows, int cols) {
  detail::require(rows >= 1 && cols >= 1, ErrorCode::kInvalidArgument, "lattice dimensions must be positive");
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1, 1.0});
      if (r + 1 < rows) edges.push_back({v, v + cols, 1.0});
    }
  }
  return build_graph(rows * cols, std::move(edges));
}

/// Honeycomb lattice in brick-wall form: every row is a path, and vertical
/// rungs join (r, c) to (r+1, c) when r + c is even, so degrees are ≤ 3.
inline WeightedGraph hex_lattice_graph(int rows, int cols) {
  detail::require(rows >= 1 && cols >= 2, ErrorCode::kInvalidArgument,
                  "hex lattice needs at least 1 row and 2 columns");
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1, 1.0});
      if (r + 1 < rows && (r + c) % 2 == 0) edges.push_back({v, v + cols, 1.0});
    }
  }
  return build_graph(rows * cols, std::move(edges));
}

/// Random recursive tree: vertex i > 0 attaches to a uniform earlier vertex.
/// Weights are drawn from [wmin, wmax] (unit when both are 1).
inline WeightedGraph random_tree(std::mt19937_64& rng, int n, double wmin = 1.0, double wmax = 1.0) {
  std::uniform_real_distribution<double> weight(wmin, wmax);
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    const int p = parent(rng);
    edges.push_back({p, i, wmin == wmax ? wmin : weight(rng)});
  }
  return build_graph(n, std::move(edges));
}

inline WeightedGraph random_tree(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  return random_tree(rng, n);
}

/// Random spanning tree plus each remaining pair with probability
/// `extra_prob`; weights uniform on [wmin, wmax].
inline WeightedGraph random_connected_graph(std::mt19937_64& rng, int n, double extra_prob, double wmin,
                                            double wmax) {
  std::uniform_real_distribution<double> weight(wmin, wmax);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto draw = [&] { return wmin == wmax ? wmin : weight(rng); };
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));
  std::vector<Edge> edges;
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    const int u = order[k];
    const int v = order[pick(rng)];
    used[u][v] = used[v][u] = 1;
    edges.push_back({u, v, draw()});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!used[i][j] && coin(rng) < extra_prob) edges.push_back({i, j, draw()});
    }
  }
  return build_graph(n, std::move(edges));
}

/// Random probability vector; each entry is zeroed with probability
/// `zero_prob` (at least one entry stays positive).
inline Measure random_measure(std::mt19937_64& rng, int n, double zero_prob = 0.0) {
  std::exponential_distribution<double> mass(1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = coin(rng) < zero_prob ? 0.0 : mass(rng);
  if (v.sum() <= 0.0) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    v[pick(rng)] = 1.0;
  }
  return Measure::normalized(v);
}

}  // namespace graphot

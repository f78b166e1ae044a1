#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"

namespace graphot {
namespace {

using testing::laplacian_from_edges;
using testing::pinv;

const Measure kAlpha({0.5, 0.5, 0.0});
const Measure kBeta({0.0, 0.25, 0.75});

// On a graph with one cycle every feasible flow is J0 + t·c, with J0 the tree
// flow of a spanning tree and c the cycle indicator; minimize over t directly.
double single_cycle_oracle(const WeightedGraph& g, int extra_edge, const Measure& a, const Measure& b, double p) {
  std::vector<Edge> tree_edges;
  for (int k = 0; k < g.num_edges(); ++k) {
    if (k != extra_edge) tree_edges.push_back(g.edge(k));
  }
  const WeightedGraph tree = build_graph(g.num_vertices(), tree_edges);
  const Vector j_tree = tree_flow(tree, a, b);
  Vector j0 = Vector::Zero(g.num_edges());
  for (int k = 0; k < tree.num_edges(); ++k) j0[g.find_edge(tree.edge(k).tail, tree.edge(k).head)] = j_tree[k];
  // Unit circulation: +1 on the extra edge, closed through the tree path.
  const Edge& e = g.edge(extra_edge);
  const Measure src = Measure::dirac(g.num_vertices(), e.head);
  const Measure dst = Measure::dirac(g.num_vertices(), e.tail);
  const Vector back = tree_flow(tree, src, dst);
  Vector c = Vector::Zero(g.num_edges());
  c[extra_edge] = 1.0;
  for (int k = 0; k < tree.num_edges(); ++k) c[g.find_edge(tree.edge(k).tail, tree.edge(k).head)] = back[k];
  auto cost = [&](double t) { return std::pow(weighted_norm(g, j0 + t * c, p), p); };
  double lo = -2.0, hi = 2.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
    if (cost(m1) < cost(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::pow(cost(0.5 * (lo + hi)), 1.0 / p);
}

TEST(BeckmannP2, WorkedExample) {
  const auto sol = beckmann_p2(decompose_transport(path_graph(3)), kAlpha, kBeta);
  EXPECT_NEAR(sol.distance * sol.distance, 0.8125, 1e-14);
  EXPECT_NEAR(sol.flow.values[0], 0.5, 1e-14);
  EXPECT_NEAR(sol.flow.values[1], 0.75, 1e-14);
  EXPECT_LE(sol.flow.residual, 1e-14);
  EXPECT_LE(sol.duality_gap, 1e-12);
}

TEST(BeckmannP2, EqualMeasuresAndEndpoints) {
  const auto zero = beckmann_p2(decompose_transport(path_graph(3)), kAlpha, kAlpha);
  EXPECT_DOUBLE_EQ(zero.distance, 0.0);
  EXPECT_LT(zero.flow.values.cwiseAbs().maxCoeff(), 1e-15);
  const auto ends = beckmann_p2(decompose_transport(path_graph(5)), Measure::dirac(5, 0), Measure::dirac(5, 4));
  EXPECT_NEAR(ends.distance, 2.0, 1e-13);
}

TEST(BeckmannP2, MatchesPseudoinverseOracleOnWeightedGraphs) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 40; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 9, 0.3, 0.2, 5.0);
    const Measure a = random_measure(rng, 9, 0.3), b = random_measure(rng, 9, 0.3);
    const Vector d = a.mass() - b.mass();
    const Matrix lp = pinv(laplacian_from_edges(g, true));
    const auto sol = beckmann_p2(decompose_transport(g), a, b);
    EXPECT_NEAR(sol.distance, std::sqrt(d.dot(lp * d)), 1e-10);
    const Vector flow = g.weights().cwiseInverse().asDiagonal() * dense_incidence(g).transpose() * lp * d;
    EXPECT_LE((sol.flow.values - flow).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(weighted_norm(g, sol.flow.values, 2.0), sol.distance, 1e-12);
  }
}

TEST(BeckmannP2, RefusesConductanceDataOnWeightedGraphs) {
  const WeightedGraph g = build_graph(3, {{0, 1, 2.0}, {1, 2, 1.0}});
  EXPECT_GRAPHOT_ERROR(beckmann_p2(decompose(g), Measure::uniform(3), Measure::dirac(3, 0)),
                       ErrorCode::kWeightRoleMismatch);
  EXPECT_NO_THROW(beckmann_p2(decompose(path_graph(3)), kAlpha, kBeta));
}

TEST(BeckmannP1, WorkedExampleAndTrees) {
  const auto sol = beckmann_p1(path_graph(3), kAlpha, kBeta);
  EXPECT_NEAR(sol.distance, 1.25, 1e-15);
  EXPECT_NEAR(sol.duality_gap, 0.0, 1e-12);
  std::mt19937_64 rng(42);
  const WeightedGraph t = random_tree(rng, 8, 0.5, 3.0);
  const PathMetric d = shortest_path_metric(t, 1.0);
  EXPECT_NEAR(beckmann_p1(t, Measure::dirac(8, 1), Measure::dirac(8, 6)).distance, d(1, 6), 1e-13);
}

TEST(BeckmannP1, EqualsWassersteinOne) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 100; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 8, 0.4, 0.2, 5.0);
    const Measure a = random_measure(rng, 8, 0.3), b = random_measure(rng, 8, 0.3);
    const auto sol = beckmann_p1(g, a, b);
    const double w1 = wasserstein(shortest_path_metric(g, 1.0), a, b, 1.0).distance;
    EXPECT_NEAR(sol.distance, w1, 1e-12);
    EXPECT_LE(sol.flow.residual, 1e-12);
    EXPECT_NEAR(dual_value(g, sol.potential, a, b, 1.0), sol.distance, 1e-12);
    EXPECT_LE(dual_norm(g, sol.potential, 1.0), 1.0 + 1e-12);
  }
}

TEST(BeckmannGeneral, WorkedExampleAtSeveralExponents) {
  for (double p : {1.1, 1.5, 2.0, 3.0, 6.0}) {
    const auto sol = beckmann_general(path_graph(3), kAlpha, kBeta, p);
    EXPECT_NEAR(std::pow(sol.distance, p), std::pow(0.5, p) + std::pow(0.75, p), 1e-10) << p;
  }
  EXPECT_NEAR(std::pow(beckmann_general(path_graph(3), kAlpha, kBeta, 3.0).distance, 3.0), 0.546875, 1e-10);
}

TEST(BeckmannGeneral, TriangleResistance) {
  const auto sol = beckmann_general(complete_graph(3), Measure::dirac(3, 0), Measure::dirac(3, 1), 2.0);
  EXPECT_NEAR(sol.distance * sol.distance, 2.0 / 3.0, 1e-10);
}

TEST(BeckmannGeneral, AgreesWithSpectralSolutionAtTwo) {
  std::mt19937_64 rng(44);
  for (int t = 0; t < 30; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 10, 0.3, 0.2, 5.0);
    const Measure a = random_measure(rng, 10, 0.3), b = random_measure(rng, 10, 0.3);
    const auto general = beckmann_general(g, a, b, 2.0);
    const auto exact = beckmann_p2(decompose_transport(g), a, b);
    EXPECT_NEAR(general.distance, exact.distance, 1e-7 * std::max(1.0, exact.distance));
  }
}

TEST(BeckmannGeneral, MatchesSingleCycleLineSearch) {
  std::mt19937_64 rng(45);
  std::uniform_int_distribution<int> size(3, 9);
  std::uniform_real_distribution<double> w(0.3, 3.0);
  for (int t = 0; t < 40; ++t) {
    const int n = size(rng);
    // A weighted cycle: exactly one independent circulation.
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, w(rng)});
    const WeightedGraph g = build_graph(n, edges);
    const Measure a = random_measure(rng, n, 0.3), b = random_measure(rng, n, 0.3);
    for (double p : {1.5, 2.5, 4.0}) {
      const double oracle = single_cycle_oracle(g, g.find_edge(0, n - 1), a, b, p);
      const auto sol = beckmann_general(g, a, b, p);
      EXPECT_NEAR(sol.distance, oracle, 1e-8 * std::max(1.0, oracle)) << "n=" << n << " p=" << p;
    }
  }
}

TEST(BeckmannGeneral, CertificateIsConsistent) {
  std::mt19937_64 rng(46);
  for (double p : {1.2, 1.5, 3.0, 5.0}) {
    for (int t = 0; t < 25; ++t) {
      const WeightedGraph g = random_connected_graph(rng, 9, 0.3, 0.3, 4.0);
      const Measure a = random_measure(rng, 9, 0.3), b = random_measure(rng, 9, 0.3);
      const auto sol = beckmann_general(g, a, b, p);
      EXPECT_LE(sol.flow.residual, 1e-8);
      EXPECT_NEAR(weighted_norm(g, sol.flow.values, p), sol.distance, 1e-12);
      const double dual = dual_value(g, sol.potential, a, b, p);
      EXPECT_LE(dual, sol.distance + 1e-12);
      EXPECT_LE(sol.distance - dual, 1e-8 * std::max(1.0, sol.distance));
    }
  }
}

TEST(DualValue, LowerBoundsAndTightWitness) {
  EXPECT_DOUBLE_EQ(dual_value(path_graph(3), Vector::Zero(3), kAlpha, kBeta, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(dual_value(path_graph(2), Vector{{1.0, 0.0}}, Measure::dirac(2, 0), Measure::dirac(2, 1), 1.0), 1.0);
  std::mt19937_64 rng(47);
  std::normal_distribution<double> z;
  const WeightedGraph tri = build_graph(3, {{0, 1, 1.5}, {0, 2, 0.7}, {1, 2, 2.0}});
  const Measure a = random_measure(rng, 3), b = random_measure(rng, 3);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const double bp = beckmann(tri, a, b, p).distance;
    for (int t = 0; t < 50; ++t) {
      const Vector phi{{z(rng), z(rng), z(rng)}};
      EXPECT_LE(dual_value(tri, phi, a, b, p), bp + 1e-10);
    }
  }
}

TEST(CouplingToFlow, SingleTransfer) {
  const WeightedGraph g = path_graph(3);
  Matrix pi = Matrix::Zero(3, 3);
  pi(0, 2) = 1.0;
  const EdgeFlow j = coupling_to_flow(g, pi, shortest_path_metric(g, 1.0));
  EXPECT_DOUBLE_EQ(j.values[0], 1.0);
  EXPECT_DOUBLE_EQ(j.values[1], 1.0);
  EXPECT_DOUBLE_EQ(weighted_norm(g, j.values, 1.0), 2.0);
  const Matrix diag = Matrix(kAlpha.mass().asDiagonal());
  EXPECT_LT(coupling_to_flow(g, diag, shortest_path_metric(g, 1.0)).values.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CouplingToFlow, ProductCouplingIsFeasibleAndCostsMore) {
  const WeightedGraph g = path_graph(3);
  const PathMetric d = shortest_path_metric(g, 1.0);
  const Matrix pi = naive_coupling(kAlpha, kBeta).plan;
  const EdgeFlow j = coupling_to_flow(g, pi, d);
  EXPECT_LE(j.residual, 1e-15);
  for (double p : {1.0, 2.0, 3.0}) {
    EXPECT_GE(weighted_norm(g, j.values, p), beckmann(g, kAlpha, kBeta, p).distance - 1e-12);
    const PathChooser chooser = [&](int i, int k) { return d.path(i, k); };
    EXPECT_GE(coupling_path_cost(g, pi, chooser, p), weighted_norm(g, j.values, p) - 1e-12);
  }
}

TEST(CouplingToFlow, RejectsBadPaths) {
  const WeightedGraph g = path_graph(3);
  Matrix pi = Matrix::Zero(3, 3);
  pi(0, 2) = 1.0;
  EXPECT_GRAPHOT_ERROR(coupling_to_flow(g, pi, PathChooser([](int, int) { return std::vector<int>{0, 2}; })),
                       ErrorCode::kPathNotConnectingPair);
  EXPECT_GRAPHOT_ERROR(coupling_to_flow(g, pi, PathChooser([](int, int) { return std::vector<int>{1, 2}; })),
                       ErrorCode::kPathNotConnectingPair);
  pi(0, 2) = 0.5;
  EXPECT_GRAPHOT_ERROR(coupling_to_flow(g, pi, shortest_path_metric(g, 1.0)), ErrorCode::kInvalidCoupling);
}

TEST(ClosedForms, PathCdf) {
  EXPECT_NEAR(beckmann_path_closed_form(kAlpha, kBeta, 2.0), std::sqrt(0.8125), 1e-15);
  EXPECT_DOUBLE_EQ(beckmann_path_closed_form(kAlpha, kAlpha, 2.0), 0.0);
  for (int n = 2; n <= 9; ++n) {
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      EXPECT_NEAR(beckmann_path_closed_form(Measure::dirac(n, 0), Measure::dirac(n, n - 1), p),
                  std::pow(n - 1.0, 1.0 / p), 1e-13);
    }
  }
  EXPECT_GRAPHOT_ERROR(beckmann_path_closed_form(star_graph(3), Measure::uniform(4), Measure::uniform(4), 2.0),
                       ErrorCode::kNotAPath);
}

TEST(ClosedForms, TreeFormula) {
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    EXPECT_NEAR(beckmann_tree_closed_form(path_graph(3), kAlpha, kBeta, p),
                beckmann_path_closed_form(kAlpha, kBeta, p), 1e-15);
    EXPECT_NEAR(beckmann_tree_closed_form(star_graph(3), Measure::dirac(4, 2), Measure::dirac(4, 0), p), 1.0, 1e-15);
  }
  std::mt19937_64 rng(48);
  for (int t = 0; t < 20; ++t) {
    const WeightedGraph tree = random_tree(rng, 7, 0.3, 3.0);
    const Measure a = random_measure(rng, 7), b = random_measure(rng, 7);
    const Vector d = a.mass() - b.mass();
    EXPECT_NEAR(beckmann_tree_closed_form(tree, a, b, 2.0),
                std::sqrt(d.dot(pinv(laplacian_from_edges(tree, true)) * d)), 1e-12);
    EXPECT_LE((divergence(tree, tree_flow(tree, a, b)) - d).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_GRAPHOT_ERROR(tree_flow(cycle_graph(4), Measure::uniform(4), Measure::dirac(4, 0)), ErrorCode::kNotATree);
}

TEST(Bounds, SecondEstimateFailsForLightEdges) {
  // B_p ≤ n^{2/q} W_{d_p,p} breaks once weights drop below 1: on one edge of
  // weight 0.1 at p = 2, B₂ = √0.1 while n^{2/q} W = 2 · 0.1.
  const WeightedGraph g = build_graph(2, {{0, 1, 0.1}});
  const Measure a = Measure::dirac(2, 0), b = Measure::dirac(2, 1);
  const double b2 = beckmann_p2(decompose_transport(g), a, b).distance;
  EXPECT_NEAR(b2, std::sqrt(0.1), 1e-14);
  const double rhs = 2.0 * wasserstein(shortest_path_metric(g, 2.0), a, b, 2.0).distance;
  EXPECT_NEAR(rhs, 0.2, 1e-14);
  EXPECT_GT(b2, rhs);
  bool seen = false;
  for (const auto& r : verify_bounds(g, a, b, 2.0)) {
    if (r.id != "bp_le_n2q_wdpp") continue;
    seen = true;
    EXPECT_LT(r.slack, 0.0);
  }
  EXPECT_TRUE(seen);
}

}  // namespace
}  // namespace graphot

#include <cmath>
#include <random>

#include "test_support.hpp"

namespace graphot {
namespace {

using testing::laplacian_from_edges;
using testing::pinv;

TEST(HittingTimes, SmallGraphs) {
  const WalkStats p2 = exact_hitting_times(path_graph(2));
  EXPECT_NEAR(p2.hitting(0, 1), 1.0, 1e-14);
  EXPECT_NEAR(p2.hitting(1, 0), 1.0, 1e-14);
  // K3: h = 1 + h/2 gives h = 2.
  const WalkStats k3 = exact_hitting_times(complete_graph(3));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(k3.hitting(i, j), i == j ? 0.0 : 2.0, 1e-13);
  }
  // P3 from an end to the other: 4 steps (gambler's ruin, (n-1)^2).
  EXPECT_NEAR(exact_hitting_times(path_graph(3)).hitting(0, 2), 4.0, 1e-13);
}

TEST(HittingTimes, StationaryLawAndFirstStepEquations) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 20; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 9, 0.3, 0.2, 5.0);
    const WalkStats ws = exact_hitting_times(g);
    const Matrix p = transition_matrix(g);
    EXPECT_NEAR(ws.stationary.sum(), 1.0, 1e-14);
    EXPECT_LE((ws.stationary.transpose() * p - ws.stationary.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(ws.hitting.minCoeff(), 0.0);
    for (int i = 0; i < 9; ++i) {
      EXPECT_DOUBLE_EQ(ws.hitting(i, i), 0.0);
      for (int j = 0; j < 9; ++j) {
        if (i == j) continue;
        EXPECT_NEAR(ws.hitting(i, j), 1.0 + p.row(i).dot(ws.hitting.col(j)), 1e-9 * ws.hitting(i, j));
      }
    }
  }
}

TEST(HittingTimes, CommuteTimeIsResistanceTimesVolume) {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 20; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 8, 0.3, 0.2, 5.0);
    const WalkStats ws = exact_hitting_times(g);
    const Matrix lp = pinv(laplacian_from_edges(g, false));
    for (int i = 0; i < 8; ++i) {
      for (int j = i + 1; j < 8; ++j) {
        const double r = lp(i, i) + lp(j, j) - 2.0 * lp(i, j);
        EXPECT_NEAR((ws.hitting(i, j) + ws.hitting(j, i)) / ws.volume, r, 1e-10);
      }
    }
  }
}

TEST(AccessTimes, Definitions) {
  const WalkStats k3 = exact_hitting_times(complete_graph(3));
  const Measure d0 = Measure::dirac(3, 0), u = Measure::uniform(3);
  EXPECT_NEAR(access_time(k3, u, u), 0.0, 1e-14);
  EXPECT_NEAR(access_time(k3, d0, Measure::dirac(3, 2)), 2.0, 1e-13);
  EXPECT_NEAR(naive_access_time(k3, d0, Measure::dirac(3, 2)), 2.0, 1e-13);
  EXPECT_NEAR(naive_access_time(k3, d0, u), 4.0 / 3.0, 1e-13);
  EXPECT_NEAR(naive_access_time(k3, u, u), 4.0 / 3.0, 1e-13);
  // α − β = (2/3, −1/3, −1/3); column j = 1 gives (2/3)·2 − (1/3)·2.
  EXPECT_NEAR(access_time(k3, d0, u), 2.0 / 3.0, 1e-13);
}

TEST(GeneralizedCommute, PointMassesAndRandomMeasures) {
  const WeightedGraph g = build_graph(4, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 0.5}, {0, 3, 1.0}, {0, 2, 3.0}});
  const WalkStats ws = exact_hitting_times(g);
  EXPECT_NEAR(generalized_commute_resistance(ws, Measure::dirac(4, 1), Measure::dirac(4, 1)), 0.0, 1e-14);
  EXPECT_NEAR(generalized_commute_resistance(ws, Measure::dirac(4, 1), Measure::dirac(4, 3)),
              (ws.hitting(1, 3) + ws.hitting(3, 1)) / ws.volume, 1e-13);
  std::mt19937_64 rng(53);
  for (int t = 0; t < 30; ++t) {
    const WeightedGraph h = random_connected_graph(rng, 8, 0.3, 0.2, 5.0);
    const Measure a = random_measure(rng, 8, 0.2), b = random_measure(rng, 8, 0.2);
    const Vector d = a.mass() - b.mass();
    EXPECT_NEAR(generalized_commute_resistance(exact_hitting_times(h), a, b),
                d.dot(pinv(laplacian_from_edges(h, false)) * d), 1e-10);
  }
}

TEST(GreenFunction, CenteredFormEqualsPseudoinverse) {
  std::mt19937_64 rng(54);
  for (int t = 0; t < 25; ++t) {
    const WeightedGraph g = random_connected_graph(rng, 10, 0.3, 0.2, 5.0);
    const Matrix green = green_function(exact_hitting_times(g));
    const Matrix center = Matrix::Identity(10, 10) - Matrix::Constant(10, 10, 0.1);
    EXPECT_LE((center * green * center - pinv(laplacian_from_edges(g, false))).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GreenFunction, RawFormIsThePseudoinverseOnlyForRegularGraphs) {
  for (const WeightedGraph& g : {cycle_graph(7), complete_graph(5)}) {
    const Matrix green = green_function(exact_hitting_times(g));
    EXPECT_LE((green - pinv(laplacian_from_edges(g, false))).cwiseAbs().maxCoeff(), 1e-10);
  }
  // On the path P3 the stationary law is not uniform and the raw formula
  // misses by a rank-two correction.
  const Matrix green = green_function(exact_hitting_times(path_graph(3)));
  EXPECT_GT((green - pinv(laplacian_from_edges(path_graph(3), false))).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(StoppingLaw, Rules) {
  const WeightedGraph g = path_graph(3);
  const Measure a = Measure::dirac(3, 0);
  EXPECT_TRUE(stopping_law(g, a, StoppingRule::fixed_horizon(0)).isApprox(a.mass()));
  EXPECT_TRUE(stopping_law(g, a, StoppingRule::fixed_horizon(2)).isApprox(Vector{{0.5, 0.0, 0.5}}));
  EXPECT_TRUE(stopping_law(g, a, StoppingRule::hit(2)).isApprox(Vector::Unit(3, 2)));
}

TEST(Simulation, SingleEdgeIsDeterministic) {
  const WeightedGraph g = path_graph(2);
  const Measure a = Measure::dirac(2, 0), b = Measure::dirac(2, 1);
  const auto rep = simulate_walks(g, a, StoppingRule::naive(b), 100, 9);
  EXPECT_DOUBLE_EQ(rep.mean_length, 1.0);
  EXPECT_EQ(rep.stop_counts[1], 100);
  EXPECT_DOUBLE_EQ(rep.exit_frequency[0], 1.0);
  EXPECT_DOUBLE_EQ(rep.exit_frequency[1], 0.0);
  const auto chk = exit_frequency_check(g, rep, a, b);
  EXPECT_DOUBLE_EQ(chk.residual, 0.0);
}

TEST(Simulation, ImmediateStopHasNoVisits) {
  const WeightedGraph g = complete_graph(4);
  const Measure a = Measure::uniform(4);
  const auto rep = simulate_walks(g, a, StoppingRule::fixed_horizon(0), 1000, 2);
  EXPECT_DOUBLE_EQ(rep.mean_length, 0.0);
  EXPECT_DOUBLE_EQ(rep.exit_frequency.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(exit_frequency_check(g, rep, a, a).residual, 0.0);
}

TEST(Simulation, NaiveRuleOnTriangle) {
  const WeightedGraph g = complete_graph(3);
  const Measure a = Measure::dirac(3, 0), b = Measure::uniform(3);
  const auto rep = simulate_walks(g, a, StoppingRule::naive(b), 100000, 77);
  EXPECT_LE(std::abs(rep.mean_length - 4.0 / 3.0), 3.0 * rep.length_se);
  // Multinomial error bars on the stopping vertex.
  for (int j = 0; j < 3; ++j) {
    const double phat = static_cast<double>(rep.stop_counts[j]) / rep.n_walks;
    EXPECT_LE(std::abs(phat - 1.0 / 3.0), 3.0 * std::sqrt(2.0 / 9.0 / rep.n_walks));
  }
  const auto chk = exit_frequency_check(g, rep, a, b);
  EXPECT_TRUE(chk.within_five_se);
}

TEST(Simulation, ReproducibleAndThreadIndependent) {
  std::mt19937_64 rng(55);
  const WeightedGraph g = random_connected_graph(rng, 7, 0.3, 0.5, 2.0);
  const Measure a = random_measure(rng, 7), b = random_measure(rng, 7);
  SimulationOptions one, four;
  four.threads = 4;
  const auto r1 = simulate_walks(g, a, StoppingRule::naive(b), 5000, 123, one);
  const auto r2 = simulate_walks(g, a, StoppingRule::naive(b), 5000, 123, four);
  EXPECT_EQ(r1.stop_counts, r2.stop_counts);
  EXPECT_EQ(r1.visits, r2.visits);
  EXPECT_EQ(r1.edge_traversals, r2.edge_traversals);
  EXPECT_DOUBLE_EQ(r1.mean_length, r2.mean_length);
  const auto r3 = simulate_walks(g, a, StoppingRule::naive(b), 5000, 124, one);
  EXPECT_NE(r1.visits, r3.visits);
}

TEST(Simulation, ExitFrequenciesSolveThePoissonEquation) {
  const WeightedGraph g = build_graph(5, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 1.0}, {3, 4, 0.5}, {0, 4, 1.5}, {1, 3, 1.0}});
  const Measure a({0.6, 0.4, 0.0, 0.0, 0.0});
  const Measure b({0.0, 0.0, 0.2, 0.3, 0.5});
  const auto rep = simulate_walks(g, a, StoppingRule::naive(b), 50000, 5);
  const auto chk = exit_frequency_check(g, rep, a, b);
  EXPECT_TRUE(chk.within_five_se) << chk.worst_ratio;
  EXPECT_LT(chk.potential_error, 0.1);
}

TEST(Simulation, Errors) {
  const WeightedGraph g = path_graph(50);
  SimulationOptions opt;
  opt.max_steps = 3;
  EXPECT_GRAPHOT_ERROR(simulate_walks(g, Measure::dirac(50, 0), StoppingRule::hit(49), 10, 1, opt),
                       ErrorCode::kHorizonExceeded);
  const auto rep = simulate_walks(path_graph(3), Measure::dirac(3, 0), StoppingRule::hit(2), 10, 1);
  EXPECT_GRAPHOT_ERROR(exit_frequency_check(path_graph(3), rep, Measure::dirac(3, 0), Measure::uniform(3)),
                       ErrorCode::kRuleMismatch);
}

}  // namespace
}  // namespace graphot

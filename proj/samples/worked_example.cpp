// Beckmann and Wasserstein distances between two measures on the path P3.

#include <cstdio>

#include "graphot/graphot.hpp"

int main() {
  const graphot::WeightedGraph g = graphot::path_graph(3);
  const graphot::Measure a({0.5, 0.5, 0.0});
  const graphot::Measure b({0.0, 0.25, 0.75});

  const auto b2 = graphot::beckmann_p2(graphot::decompose_transport(g), a, b);
  std::printf("B2 = %.12f  flow = (%.3f, %.3f)\n", b2.distance, b2.flow.values[0], b2.flow.values[1]);

  for (double p : {1.0, 1.5, 3.0}) {
    const auto bp = graphot::beckmann(g, a, b, p);
    const auto wp = graphot::wasserstein(graphot::shortest_path_metric(g, 1.0), a, b, p);
    std::printf("p = %.1f  B_p = %.12f (gap %.1e)  W_p = %.12f\n", p, bp.distance, bp.duality_gap, wp.distance);
  }

  const auto s = graphot::decompose(g);
  std::printf("resistance r_ab = %.12f\n", graphot::measure_resistance(s, a, b));
  return 0;
}

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace graphot {
namespace {

DistributionalDataset ingest_text(const std::string& text, CsvLayout layout, const WeightedGraph& base) {
  std::istringstream in(text);
  return ingest_csv(in, layout, base);
}

std::set<std::pair<int, int>> edge_set(const WeightedGraph& g) {
  std::set<std::pair<int, int>> out;
  for (const auto& e : g.edges()) out.emplace(std::min(e.tail, e.head), std::max(e.tail, e.head));
  return out;
}

// Pair counts: same/same, same/different, different/same, different/different.
struct PairCounts {
  double ss = 0, sd = 0, ds = 0, dd = 0;
};

PairCounts count_pairs(const std::vector<int>& truth, const std::vector<int>& pred) {
  PairCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const bool st = truth[i] == truth[j], sp = pred[i] == pred[j];
      if (st && sp) c.ss += 1;
      if (st && !sp) c.sd += 1;
      if (!st && sp) c.ds += 1;
      if (!st && !sp) c.dd += 1;
    }
  }
  return c;
}

double entropy_of(const std::vector<int>& labels) {
  std::map<int, double> counts;
  for (int l : labels) counts[l] += 1.0;
  double h = 0.0;
  for (const auto& [l, c] : counts) h -= c / labels.size() * std::log(c / labels.size());
  return h;
}

std::vector<int> joint(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * 1000 + b[i];
  return out;
}

TEST(Ingest, NormalizesRowsAndReadsLabels) {
  const auto ds = ingest_text("p0,p1,p2,p3,label\n1,1,1,1,7\n0,2,0,6,3\n", CsvLayout::kPixelsWithLabel,
                              lattice_graph(2, 2));
  ASSERT_EQ(ds.size(), 2);
  EXPECT_TRUE(ds.samples[0].mass().isApprox(Vector::Constant(4, 0.25)));
  EXPECT_TRUE(ds.samples[1].mass().isApprox(Vector{{0.0, 0.25, 0.0, 0.75}}));
  EXPECT_EQ(ds.labels, (std::vector<int>{7, 3}));
  const auto rows = ingest_text("1,0,0,1\n", CsvLayout::kMeasureRows, lattice_graph(2, 2));
  EXPECT_TRUE(rows.labels.empty());
  EXPECT_DOUBLE_EQ(rows.samples[0][3], 0.5);
}

TEST(Ingest, RejectsBadRows) {
  const WeightedGraph base = lattice_graph(2, 2);
  EXPECT_GRAPHOT_ERROR(ingest_text("0,0,0,0,1\n", CsvLayout::kPixelsWithLabel, base), ErrorCode::kZeroMassRow);
  EXPECT_GRAPHOT_ERROR(ingest_text("1,1,1,1,1\n1,1,1,1\n", CsvLayout::kPixelsWithLabel, base),
                       ErrorCode::kRaggedRow);
  EXPECT_GRAPHOT_ERROR(ingest_text("1,-1,1,1,1\n", CsvLayout::kPixelsWithLabel, base), ErrorCode::kNegativePixel);
  EXPECT_GRAPHOT_ERROR(ingest_text("1,1,1,1,1\n1,x,1,1,1\n", CsvLayout::kPixelsWithLabel, base),
                       ErrorCode::kParseError);
}

TEST(PairwiseDistances, SmallCases) {
  DistributionalDataset one;
  one.base = path_graph(3);
  one.samples = {Measure::uniform(3)};
  EXPECT_EQ(pairwise_distances(one, DistanceKind::kBeckmann2).size(), 1);

  DistributionalDataset ds;
  ds.base = path_graph(3);
  ds.samples = {Measure({0.5, 0.5, 0.0}), Measure({0.0, 0.25, 0.75}), Measure({0.5, 0.5, 0.0})};
  const Matrix b2 = pairwise_distances(ds, DistanceKind::kBeckmann2);
  const Matrix w2 = pairwise_distances(ds, DistanceKind::kWasserstein2, 2);
  EXPECT_NEAR(b2(0, 1), std::sqrt(0.8125), 1e-14);
  EXPECT_NEAR(w2(0, 1), std::sqrt(1.75), 1e-14);
  EXPECT_NEAR(b2(0, 2), 0.0, 1e-14);
  EXPECT_NEAR(w2(0, 2), 0.0, 1e-14);
  EXPECT_TRUE(b2.isApprox(b2.transpose()));
  EXPECT_DOUBLE_EQ(w2.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(PairwiseDistances, EmbeddingAgreesWithPerPairBeckmann) {
  std::mt19937_64 rng(71);
  DistributionalDataset ds;
  ds.base = random_connected_graph(rng, 9, 0.3, 0.3, 3.0);
  for (int i = 0; i < 6; ++i) ds.samples.push_back(random_measure(rng, 9, 0.3));
  const Matrix b2 = pairwise_distances(ds, DistanceKind::kBeckmann2);
  const SpectralData s = decompose_transport(ds.base);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(b2(i, j), beckmann_p2(s, ds.samples[i], ds.samples[j]).distance, 1e-12);
  }
}

TEST(Kernel, IsPositiveSemidefinite) {
  std::mt19937_64 rng(72);
  DistributionalDataset ds;
  ds.base = lattice_graph(3, 3);
  for (int i = 0; i < 12; ++i) ds.samples.push_back(random_measure(rng, 9));
  const Matrix k = kernel_matrix(pairwise_distances(ds, DistanceKind::kBeckmann2));
  EXPECT_TRUE(k.diagonal().isOnes());
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues().minCoeff(), -1e-12);
}

Matrix line_distances(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = std::abs(xs[i] - xs[j]);
  }
  return d;
}

TEST(KnnGraph, Shapes) {
  const WeightedGraph full = knn_graph(line_distances({0.0, 0.4, 1.3, 2.0}), 3);
  EXPECT_EQ(full.num_edges(), 6);
  const WeightedGraph path = knn_graph(line_distances({0.0, 1.0, 3.0}), 1);
  EXPECT_EQ(edge_set(path), (std::set<std::pair<int, int>>{{0, 1}, {1, 2}}));
  EXPECT_NEAR(path.edges()[0].weight, std::exp(-1.0), 1e-15);
  // All distances tie, so every vertex chooses the lowest other index.
  Matrix flat = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
  EXPECT_EQ(edge_set(knn_graph(flat, 1)), (std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}}));
}

TEST(KnnGraph, Errors) {
  EXPECT_GRAPHOT_ERROR(knn_graph(line_distances({0.0, 0.1, 5.0, 5.1}), 1), ErrorCode::kDisconnectedKnn);
  EXPECT_GRAPHOT_ERROR(knn_graph(line_distances({0.0, 1.0}), 2), ErrorCode::kInvalidArgument);
  EXPECT_GRAPHOT_ERROR(knn_graph(Matrix::Zero(2, 3), 1), ErrorCode::kShapeMismatch);
}

TEST(SpectralCluster, SeparatesBridgedCliques) {
  std::vector<Edge> edges;
  for (int base : {0, 5}) {
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) edges.push_back({base + i, base + j, 1.0});
    }
  }
  edges.push_back({4, 5, 0.01});
  const WeightedGraph g = build_graph(10, edges);
  const std::vector<int> labels = spectral_cluster(g, 2, 3);
  for (int i = 1; i < 5; ++i) EXPECT_EQ(labels[i], labels[0]);
  for (int i = 6; i < 10; ++i) EXPECT_EQ(labels[i], labels[5]);
  EXPECT_NE(labels[0], labels[5]);
  EXPECT_EQ(spectral_cluster(g, 2, 3), labels);
}

TEST(SpectralCluster, OneClusterPerVertex) {
  const std::vector<int> labels = spectral_cluster(complete_graph(4), 4, 1);
  EXPECT_EQ(std::set<int>(labels.begin(), labels.end()).size(), 4u);
}

TEST(KMeans, BestInertiaFindsSeparatedBlobs) {
  Matrix pts(6, 2);
  pts << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 5.1, 5, 5, 5.1;
  const auto runs = kmeans_runs(pts, 2, 4, 10);
  EXPECT_EQ(runs.size(), 10u);
  const auto& best = best_inertia(runs);
  // Each blob has centroid offset (1/30, 1/30) and squared spread 12/900.
  EXPECT_NEAR(best.inertia, 2.0 * 12.0 / 900.0, 1e-12);
  EXPECT_DOUBLE_EQ(evaluate(best.labels, {0, 0, 0, 1, 1, 1}).adjusted_rand_index, 1.0);
}

TEST(Evaluate, PerfectAndTrivialClusterings) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const auto perfect = evaluate({5, 5, 3, 3, 9, 9}, truth);
  EXPECT_DOUBLE_EQ(perfect.rand_index, 1.0);
  EXPECT_NEAR(perfect.adjusted_rand_index, 1.0, 1e-15);
  EXPECT_NEAR(perfect.adjusted_mutual_information, 1.0, 1e-12);
  EXPECT_NEAR(perfect.homogeneity, 1.0, 1e-15);
  EXPECT_NEAR(perfect.completeness, 1.0, 1e-15);
  const auto lumped = evaluate({0, 0, 0, 0, 0, 0}, truth);
  EXPECT_NEAR(lumped.completeness, 1.0, 1e-15);
  EXPECT_NEAR(lumped.homogeneity, 0.0, 1e-15);
  EXPECT_NEAR(lumped.mutual_information, 0.0, 1e-15);
}

TEST(Evaluate, MatchesPairCountingAndEntropyOracles) {
  const std::vector<std::pair<std::vector<int>, std::vector<int>>> cases = {
      {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}},
      {{0, 0, 1, 1, 2, 2, 2, 0, 1, 2}, {1, 1, 0, 0, 2, 2, 0, 1, 0, 2}},
  };
  for (const auto& [truth, pred] : cases) {
    const auto ev = evaluate(pred, truth);
    const PairCounts c = count_pairs(truth, pred);
    const double total = c.ss + c.sd + c.ds + c.dd;
    EXPECT_NEAR(ev.rand_index, (c.ss + c.dd) / total, 1e-14);
    const double ari = 2.0 * (c.ss * c.dd - c.sd * c.ds) /
                       ((c.ss + c.sd) * (c.sd + c.dd) + (c.ss + c.ds) * (c.ds + c.dd));
    EXPECT_NEAR(ev.adjusted_rand_index, ari, 1e-14);
    const double mi = entropy_of(truth) + entropy_of(pred) - entropy_of(joint(truth, pred));
    EXPECT_NEAR(ev.mutual_information, mi, 1e-14);
    EXPECT_NEAR(ev.homogeneity, mi / entropy_of(truth), 1e-14);
    EXPECT_NEAR(ev.completeness, mi / entropy_of(pred), 1e-14);
  }
  // Reference values from scikit-learn, average_method="max".
  EXPECT_NEAR(evaluate(cases[0].second, cases[0].first).adjusted_mutual_information, 0.22504228319830885, 1e-12);
  EXPECT_NEAR(evaluate(cases[1].second, cases[1].first).adjusted_mutual_information, 0.7172912023015784, 1e-12);
}

TEST(Evaluate, InvariantUnderRelabeling) {
  const std::vector<int> truth{0, 1, 1, 2, 2, 2, 0, 1};
  const auto a = evaluate({0, 0, 1, 1, 2, 2, 0, 1}, truth);
  const auto b = evaluate({7, 7, 3, 3, 5, 5, 7, 3}, truth);
  EXPECT_DOUBLE_EQ(a.adjusted_rand_index, b.adjusted_rand_index);
  EXPECT_DOUBLE_EQ(a.adjusted_mutual_information, b.adjusted_mutual_information);
  EXPECT_GRAPHOT_ERROR(evaluate({0, 1}, {0, 1, 2}), ErrorCode::kLengthMismatch);
}

TEST(Regression, SlopeThroughOrigin) {
  EXPECT_DOUBLE_EQ(regression_slope(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 2.0);
  // Σxy / Σx² = (1·1 + 2·3) / 5.
  EXPECT_DOUBLE_EQ(regression_slope(std::vector<double>{1, 2}, std::vector<double>{1, 3}), 7.0 / 5.0);
  EXPECT_GRAPHOT_ERROR(regression_slope(std::vector<double>{0, 0}, std::vector<double>{1, 2}),
                       ErrorCode::kDegenerateRegressor);
  EXPECT_GRAPHOT_ERROR(regression_slope(Matrix::Ones(3, 3), Matrix::Ones(2, 2)), ErrorCode::kShapeMismatch);
  Matrix b2(3, 3), w2(3, 3);
  b2 << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  w2 = 4.0 * b2;
  w2(1, 0) = 100.0;  // lower triangle is ignored
  EXPECT_DOUBLE_EQ(regression_slope(b2, w2), 4.0);
}

TEST(SamplePairs, DistinctSortedAndComplete) {
  const auto all = sample_pairs(6, 1000, 1);
  EXPECT_EQ(all.size(), 15u);
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : all) {
    EXPECT_LT(i, j);
    EXPECT_LT(j, 6);
    seen.emplace(i, j);
  }
  EXPECT_EQ(seen.size(), 15u);
  const auto some = sample_pairs(100, 500, 3);
  EXPECT_EQ(some.size(), 500u);
  EXPECT_EQ((std::set<std::pair<int, int>>(some.begin(), some.end()).size()), 500u);
  EXPECT_TRUE(std::is_sorted(some.begin(), some.end()));
  EXPECT_EQ(sample_pairs(100, 500, 3), some);
}

TEST(Synthetic, TwoClassDatasetIsClusterable) {
  const DistributionalDataset ds = synthetic_two_class(6, 6, 40, 5);
  ASSERT_EQ(ds.size(), 40);
  for (const auto& m : ds.samples) EXPECT_NEAR(m.mass().sum(), 1.0, 1e-12);
  const WeightedGraph g = knn_graph(pairwise_distances(ds, DistanceKind::kBeckmann2), 8);
  EXPECT_GT(evaluate(spectral_cluster(g, 2, 1), ds.labels).adjusted_rand_index, 0.7);
}

}  // namespace
}  // namespace graphot

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "graphot/error.hpp"
#include "graphot/generators.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"
#include "graphot/spectral.hpp"
#include "graphot/transport.hpp"

namespace graphot {

/// N measures on one base graph, with optional class labels.
struct DistributionalDataset {
  WeightedGraph base;
  std::vector<Measure> samples;
  std::vector<int> labels;  // empty when the input had none

  int size() const noexcept { return static_cast<int>(samples.size()); }
  bool has_labels() const noexcept { return !labels.empty(); }
};

enum class CsvLayout { kPixelsWithLabel, kMeasureRows };

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Reads one sample per row; each row is divided by its sum. A first row
/// that does not parse as numbers is treated as a header.
inline DistributionalDataset ingest_csv(std::istream& in, CsvLayout layout, const WeightedGraph& base) {
  const int n = base.num_vertices();
  const int width = layout == CsvLayout::kPixelsWithLabel ? n + 1 : n;
  DistributionalDataset ds;
  ds.base = base;
  std::string line;
  int row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t k = 0; k < cells.size(); ++k) numeric = numeric && detail::parse_double(cells[k], values[k]);
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    detail::require(numeric, ErrorCode::kParseError, "row " + std::to_string(row) + " has a non-numeric cell");
    detail::require(static_cast<int>(cells.size()) == width, ErrorCode::kRaggedRow,
                    "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(width));
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      detail::require(values[i] >= 0.0, ErrorCode::kNegativePixel,
                      "row " + std::to_string(row) + " column " + std::to_string(i) + " is negative");
      v[i] = values[i];
    }
    const double total = v.sum();
    detail::require(total > 0.0, ErrorCode::kZeroMassRow, "row " + std::to_string(row) + " has zero mass");
    ds.samples.emplace_back(v / total);
    if (layout == CsvLayout::kPixelsWithLabel) ds.labels.push_back(static_cast<int>(std::lround(values[n])));
    ++row;
  }
  return ds;
}

inline DistributionalDataset ingest_csv(const std::string& path, CsvLayout layout, const WeightedGraph& base) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path);
  return ingest_csv(in, layout, base);
}

enum class DistanceKind { kBeckmann2, kWasserstein2 };

namespace detail {

template <class Fn>
void parallel_for(long count, int threads, Fn&& body) {
  threads = std::max(1, threads);
  if (threads <= 1 || count <= 1) {
    for (long k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (long k; (k = next.fetch_add(1)) < count;) body(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// L^{-1/2}α for every sample (transport Laplacian), one row per sample.
inline Matrix embed_dataset(const DistributionalDataset& ds) {
  const SpectralData s = decompose_transport(ds.base);
  const Matrix half = s.inv_sqrt_matrix();
  Matrix out(ds.size(), ds.base.num_vertices());
  for (int i = 0; i < ds.size(); ++i) out.row(i) = (half * ds.samples[i].mass()).transpose();
  return out;
}

/// W₂ with ground cost d₁² for each listed pair.
inline std::vector<double> wasserstein2_pairs(const DistributionalDataset& ds,
                                              const std::vector<std::pair<int, int>>& pairs, int threads = 1) {
  const Matrix d1 = shortest_path_metric(ds.base, 1.0).matrix();
  std::vector<double> out(pairs.size());
  detail::parallel_for(static_cast<long>(pairs.size()), threads, [&](long k) {
    const auto [i, j] = pairs[k];
    out[k] = wasserstein(d1, ds.samples[i], ds.samples[j], 2.0).distance;
  });
  return out;
}

/// Full symmetric N×N distance matrix.
inline Matrix pairwise_distances(const DistributionalDataset& ds, DistanceKind kind, int threads = 1) {
  const int n = ds.size();
  Matrix out = Matrix::Zero(n, n);
  if (kind == DistanceKind::kBeckmann2) {
    const Matrix emb = embed_dataset(ds);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) out(i, j) = out(j, i) = (emb.row(i) - emb.row(j)).norm();
    }
    return out;
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const std::vector<double> d = wasserstein2_pairs(ds, pairs, threads);
  for (std::size_t k = 0; k < pairs.size(); ++k) out(pairs[k].first, pairs[k].second) = out(pairs[k].second, pairs[k].first) = d[k];
  return out;
}

/// Up to max_pairs distinct unordered pairs (i < j), uniformly without
/// replacement, sorted. Returns all pairs when max_pairs covers them.
inline std::vector<std::pair<int, int>> sample_pairs(int n, long max_pairs, std::uint64_t seed) {
  const long total = static_cast<long>(n) * (n - 1) / 2;
  std::vector<long> picks;
  if (max_pairs >= total) {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), 0L);
  } else {
    // Floyd's algorithm over the upper-triangle index range.
    std::mt19937_64 rng(seed);
    std::unordered_set<long> chosen;
    chosen.reserve(static_cast<std::size_t>(max_pairs) * 2);
    for (long j = total - max_pairs; j < total; ++j) {
      std::uniform_int_distribution<long> pick(0, j);
      const long t = pick(rng);
      chosen.insert(chosen.count(t) ? j : t);
    }
    picks.assign(chosen.begin(), chosen.end());
    std::sort(picks.begin(), picks.end());
  }
  std::vector<std::pair<int, int>> out;
  out.reserve(picks.size());
  int i = 0;
  long row_start = 0;  // index of pair (i, i+1)
  for (long k : picks) {
    while (k >= row_start + (n - 1 - i)) {
      row_start += n - 1 - i;
      ++i;
    }
    out.emplace_back(i, i + 1 + static_cast<int>(k - row_start));
  }
  return out;
}

/// exp(−d²) entrywise.
inline Matrix kernel_matrix(const Matrix& dist) { return (-dist.array().square()).exp().matrix(); }

namespace detail {

inline int count_components(int n, const std::vector<Edge>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int comps = n;
  for (const auto& e : edges) {
    const int a = find(e.tail), b = find(e.head);
    if (a != b) {
      parent[a] = b;
      --comps;
    }
  }
  return comps;
}

}  // namespace detail

/// Union-symmetrized k-nearest-neighbor graph with weights exp(−d²).
/// Ties in distance go to the lower sample index.
inline WeightedGraph knn_graph(const Matrix& dist, int k) {
  const int n = static_cast<int>(dist.rows());
  detail::require(dist.cols() == n, ErrorCode::kShapeMismatch, "distance matrix must be square");
  detail::require(k >= 1 && k < n, ErrorCode::kInvalidArgument, "need 1 <= k < N");
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
    });
    for (int t = 0; t < k; ++t) adj[i][order[t]] = adj[order[t]][i] = 1;
  }
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!adj[i][j]) continue;
      const double w = std::exp(-dist(i, j) * dist(i, j));
      edges.push_back({i, j, std::max(w, std::numeric_limits<double>::min())});
    }
  }
  const int comps = detail::count_components(n, edges);
  detail::require(comps == 1, ErrorCode::kDisconnectedKnn,
                  "kNN graph has " + std::to_string(comps) + " connected components");
  return build_graph(n, std::move(edges));
}

/// Rows of D^{-1/2}V for the bottom `n_clusters` eigenvectors V of
/// I − D^{-1/2}AD^{-1/2} (the random-walk Laplacian's eigenvectors),
/// normalized to unit length.
inline Matrix spectral_embedding(const WeightedGraph& g, int n_clusters) {
  const int n = g.num_vertices();
  detail::require(n_clusters >= 1 && n_clusters <= n, ErrorCode::kInvalidArgument, "bad cluster count");
  Vector inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(g.degree(i));
  Matrix lsym = Matrix::Identity(n, n);
  for (const auto& e : g.edges()) {
    const double v = e.weight * inv_sqrt_deg[e.tail] * inv_sqrt_deg[e.head];
    lsym(e.tail, e.head) -= v;
    lsym(e.head, e.tail) -= v;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lsym);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kConvergenceFailure, "normalized Laplacian eigensolver failed");
  }
  Matrix u = inv_sqrt_deg.asDiagonal() * eig.eigenvectors().leftCols(n_clusters);
  for (int i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  return u;
}

struct KMeansRun {
  std::vector<int> labels;
  double inertia = 0.0;
};

/// One k-means++ seeded Lloyd run on the rows of `points`.
inline KMeansRun kmeans_once(const Matrix& points, int k, std::uint64_t seed, int max_iter = 300) {
  const int n = static_cast<int>(points.rows());
  detail::require(k >= 1 && k <= n, ErrorCode::kInvalidArgument, "bad cluster count");
  std::mt19937_64 rng(seed);
  Matrix centers(k, points.cols());
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  Vector closest(n);
  for (int i = 0; i < n; ++i) closest[i] = (points.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    int pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= closest[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = points.row(pick);
    for (int i = 0; i < n; ++i) closest[i] = std::min(closest[i], (points.row(i) - centers.row(c)).squaredNorm());
  }

  KMeansRun run;
  run.labels.assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    run.inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      run.inertia += bd;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(run.labels[i]) += points.row(i);
      ++counts[run.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }
  return run;
}

/// `restarts` independent k-means++ runs; run r uses seed (seed, r).
inline std::vector<KMeansRun> kmeans_runs(const Matrix& points, int k, std::uint64_t seed, int restarts = 100) {
  std::vector<KMeansRun> runs;
  runs.reserve(restarts);
  for (int r = 0; r < restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::uint64_t run_seed = 0;
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    run_seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    runs.push_back(kmeans_once(points, k, run_seed));
  }
  return runs;
}

inline const KMeansRun& best_inertia(const std::vector<KMeansRun>& runs) {
  return *std::min_element(runs.begin(), runs.end(),
                           [](const KMeansRun& a, const KMeansRun& b) { return a.inertia < b.inertia; });
}

/// Normalized spectral clustering; labels of the lowest-inertia run out of
/// 100 k-means++ restarts.
inline std::vector<int> spectral_cluster(const WeightedGraph& g, int n_clusters, std::uint64_t seed) {
  detail::require(n_clusters >= 2 && n_clusters <= g.num_vertices(), ErrorCode::kInvalidArgument,
                  "need 2 <= clusters <= N");
  return best_inertia(kmeans_runs(spectral_embedding(g, n_clusters), n_clusters, seed)).labels;
}

struct ClusterEvaluation {
  double rand_index = 0.0;
  double adjusted_rand_index = 0.0;
  double mutual_information = 0.0;
  double adjusted_mutual_information = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
};

/// External clustering scores from the contingency table (natural logs,
/// AMI with max-normalization).
inline ClusterEvaluation evaluate(const std::vector<int>& pred, const std::vector<int>& truth) {
  detail::require(pred.size() == truth.size(), ErrorCode::kLengthMismatch, "label vectors differ in length");
  detail::require(!pred.empty(), ErrorCode::kLengthMismatch, "no labels");
  auto relabel = [](const std::vector<int>& v) {
    std::map<int, int> ids;
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = ids.emplace(v[i], static_cast<int>(ids.size())).first->second;
    return std::pair(out, static_cast<int>(ids.size()));
  };
  const auto [t, nt] = relabel(truth);
  const auto [p, np] = relabel(pred);
  const double total = static_cast<double>(pred.size());
  std::vector<std::vector<double>> table(nt, std::vector<double>(np, 0.0));
  std::vector<double> rows(nt, 0.0), cols(np, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    table[t[i]][p[i]] += 1.0;
    rows[t[i]] += 1.0;
    cols[p[i]] += 1.0;
  }
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < nt; ++i) {
    sum_rows += comb2(rows[i]);
    for (int j = 0; j < np; ++j) sum_cells += comb2(table[i][j]);
  }
  for (int j = 0; j < np; ++j) sum_cols += comb2(cols[j]);
  const double pairs = comb2(total);

  ClusterEvaluation ev;
  ev.rand_index = pairs > 0.0 ? (pairs + 2.0 * sum_cells - sum_rows - sum_cols) / pairs : 1.0;
  const double expected = pairs > 0.0 ? sum_rows * sum_cols / pairs : 0.0;
  const double ari_den = 0.5 * (sum_rows + sum_cols) - expected;
  ev.adjusted_rand_index = ari_den != 0.0 ? (sum_cells - expected) / ari_den : 1.0;

  auto entropy = [&](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) h -= c / total * std::log(c / total);
    }
    return h;
  };
  const double ht = entropy(rows);
  const double hp = entropy(cols);
  double mi = 0.0;
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const double c = table[i][j];
      if (c > 0.0) mi += c / total * std::log(total * c / (rows[i] * cols[j]));
    }
  }
  mi = std::max(0.0, mi);
  ev.mutual_information = mi;

  // Expected MI under the permutation model.
  double emi = 0.0;
  const double lg_total = std::lgamma(total + 1.0);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const double a = rows[i], b = cols[j];
      const double lo = std::max(1.0, a + b - total);
      const double hi = std::min(a, b);
      const double fixed = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(total - a + 1.0) +
                           std::lgamma(total - b + 1.0) - lg_total;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_prob = fixed - std::lgamma(nij + 1.0) - std::lgamma(a - nij + 1.0) -
                                std::lgamma(b - nij + 1.0) - std::lgamma(total - a - b + nij + 1.0);
        emi += nij / total * std::log(total * nij / (a * b)) * std::exp(log_prob);
      }
    }
  }
  const double ami_den = std::max(ht, hp) - emi;
  if ((nt == 1 && np == 1) || std::abs(ami_den) < 1e-15) {
    ev.adjusted_mutual_information = 1.0;
  } else {
    ev.adjusted_mutual_information = (mi - emi) / ami_den;
  }
  ev.homogeneity = ht > 0.0 ? mi / ht : 1.0;
  ev.completeness = hp > 0.0 ? mi / hp : 1.0;
  return ev;
}

/// Least-squares slope through the origin of y on x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size(), ErrorCode::kShapeMismatch, "regression inputs differ in length");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += x[k] * y[k];
    sxx += x[k] * x[k];
  }
  detail::require(sxx > 0.0, ErrorCode::kDegenerateRegressor, "regressor is identically zero");
  return sxy / sxx;
}

/// Slope of w2 on b2 over the strict upper triangle.
inline double regression_slope(const Matrix& b2, const Matrix& w2) {
  detail::require(b2.rows() == w2.rows() && b2.cols() == w2.cols() && b2.rows() == b2.cols(),
                  ErrorCode::kShapeMismatch, "distance matrices must be square and equally shaped");
  std::vector<double> x, y;
  for (Eigen::Index i = 0; i < b2.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < b2.cols(); ++j) {
      x.push_back(b2(i, j));
      y.push_back(w2(i, j));
    }
  }
  return regression_slope(x, y);
}

/// Two-class lattice dataset: class 0 puts a bump in the left half, class 1
/// in the right half, plus uniform noise.
inline DistributionalDataset synthetic_two_class(int rows, int cols, int n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.05);
  std::normal_distribution<double> jitter(0.0, 0.6);
  DistributionalDataset ds;
  ds.base = lattice_graph(rows, cols);
  for (int s = 0; s < n_samples; ++s) {
    const int label = s % 2;
    const double cr = (rows - 1) / 2.0 + jitter(rng);
    const double cc = (label == 0 ? (cols - 1) * 0.25 : (cols - 1) * 0.75) + jitter(rng);
    Vector v(rows * cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        v[r * cols + c] = std::exp(-d2 / 2.0) + noise(rng);
      }
    }
    ds.samples.push_back(Measure::normalized(v));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace graphot

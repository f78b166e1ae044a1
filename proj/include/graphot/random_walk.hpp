#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"

namespace graphot {

/// Exact hitting times of the simple random walk with P = D⁻¹A.
struct WalkStats {
  Matrix hitting;     // H(i, j), zero diagonal
  Vector stationary;  // ρ_i = d_i / vol
  double volume = 0.0;
};

/// Transition matrix D⁻¹A.
inline Matrix transition_matrix(const WeightedGraph& g) {
  const int n = g.num_vertices();
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& inc : g.neighbors(i)) p(i, inc.neighbor) += inc.weight / g.degree(i);
  }
  return p;
}

/// For each target j, solves (I − P) h = 1 on V∖{j}.
inline WalkStats exact_hitting_times(const WeightedGraph& g) {
  const int n = g.num_vertices();
  const Matrix p = transition_matrix(g);
  WalkStats out;
  out.hitting = Matrix::Zero(n, n);
  out.volume = g.volume();
  out.stationary.resize(n);
  for (int i = 0; i < n; ++i) out.stationary[i] = g.degree(i) / g.volume();
  if (n == 1) return out;

  Matrix sub(n - 1, n - 1);
  for (int j = 0; j < n; ++j) {
    auto keep = [j](int r) { return r < j ? r : r + 1; };
    for (int r = 0; r < n - 1; ++r) {
      for (int c = 0; c < n - 1; ++c) sub(r, c) = (r == c ? 1.0 : 0.0) - p(keep(r), keep(c));
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    if (!lu.isInvertible()) {
      throw Error(ErrorCode::kSingularSystem, "hitting-time system for target " + std::to_string(j) + " is singular");
    }
    const Vector h = lu.solve(Vector::Ones(n - 1));
    for (int r = 0; r < n - 1; ++r) out.hitting(keep(r), j) = h[r];
  }
  return out;
}

/// H(α, β) = max_j Σ_i (α_i − β_i) H(i, j), the optimal access time.
inline double access_time(const WalkStats& ws, const Measure& a, const Measure& b) {
  const Vector d = mass_difference(static_cast<int>(ws.hitting.rows()), a, b);
  return (ws.hitting.transpose() * d).maxCoeff();
}

/// Σ_ij α_i β_j H(i, j), the mean duration of the naive rule.
inline double naive_access_time(const WalkStats& ws, const Measure& a, const Measure& b) {
  detail::require_size(a.size(), ws.hitting.rows(), "first measure");
  detail::require_size(b.size(), ws.hitting.rows(), "second measure");
  return a.mass().dot(ws.hitting * b.mass());
}

/// −(1/vol) Σ_{i,k} (α_i − β_i)(α_k − β_k) H(i, k).
inline double generalized_commute_resistance(const WalkStats& ws, const Measure& a, const Measure& b) {
  const Vector d = mass_difference(static_cast<int>(ws.hitting.rows()), a, b);
  return -d.dot(ws.hitting * d) / ws.volume;
}

/// G(i, j) = (H(ρ, j) − H(i, j)) / vol. This is the Green function with
/// LG = I − ρ1ᵀ and Gρ = 0; it equals L† only when ρ is uniform. Centering
/// both sides, (I − 11ᵀ/n) G (I − 11ᵀ/n), gives L† on any connected graph.
inline Matrix green_function(const WalkStats& ws) {
  const Vector h_rho = ws.hitting.transpose() * ws.stationary;
  Matrix out = (-ws.hitting).rowwise() + h_rho.transpose();
  return out / ws.volume;
}

struct StoppingRule {
  enum class Kind { kNaive, kHitNode, kHorizon };
  Kind kind = Kind::kNaive;
  Vector target;  // naive: β
  int node = 0;  // hit
  long horizon = 0;  // fixed horizon

  static StoppingRule naive(const Measure& beta) { return {Kind::kNaive, beta.mass(), 0, 0}; }
  static StoppingRule hit(int j) { return {Kind::kHitNode, {}, j, 0}; }
  static StoppingRule fixed_horizon(long t) { return {Kind::kHorizon, {}, 0, t}; }
};

/// Exact law of the stopping vertex for a walk started from α.
inline Vector stopping_law(const WeightedGraph& g, const Measure& a, const StoppingRule& rule) {
  const int n = g.num_vertices();
  switch (rule.kind) {
    case StoppingRule::Kind::kNaive:
      return rule.target;
    case StoppingRule::Kind::kHitNode: {
      Vector v = Vector::Zero(n);
      v[rule.node] = 1.0;
      return v;
    }
    case StoppingRule::Kind::kHorizon: {
      Vector mu = a.mass();
      for (long t = 0; t < rule.horizon; ++t) {
        Vector next = Vector::Zero(n);
        for (int i = 0; i < n; ++i) {
          if (mu[i] == 0.0) continue;
          for (const auto& inc : g.neighbors(i)) next[inc.neighbor] += mu[i] * inc.weight / g.degree(i);
        }
        mu = std::move(next);
      }
      return mu;
    }
  }
  return {};
}

struct SimulationOptions {
  long max_steps = 10'000'000;  // per walk
  int threads = 1;
};

struct SimulationReport {
  long n_walks = 0;
  std::uint64_t seed = 0;
  Vector start;       // α
  Vector target_law;  // exact stopping law of the rule
  std::vector<long long> stop_counts;
  double mean_length = 0.0;
  double length_se = 0.0;
  std::vector<long long> edge_traversals;  // either direction, E' order
  std::vector<long long> visits;           // pre-stop visits per vertex
  Vector exit_frequency;                   // visits / (n_walks · d_i)
  Vector exit_residual_se;                 // standard error of (L f̂)(i)
};

namespace detail {

/// SplitMix64: a counter-based stream, one per (seed, walk id).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t walk_stream_seed(std::uint64_t seed, std::uint64_t walk) {
  SplitMix64 mix(seed);
  return mix.next() ^ (walk * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
}

inline int sample_cumulative(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u * cum.back());
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
}

struct BlockTally {
  std::vector<long long> stops, traversals, visits;
  double length_sum = 0.0, length_sq = 0.0;
  Vector y_sum, y_sq;
};

}  // namespace detail

/// Monte-Carlo walks from α under `rule`. Walks are processed in fixed
/// blocks of 1024 and reduced in block order, so the report depends only on
/// (seed, n_walks), never on the thread count.
inline SimulationReport simulate_walks(const WeightedGraph& g, const Measure& a, const StoppingRule& rule,
                                       long n_walks, std::uint64_t seed,
                                       const SimulationOptions& opt = {}) {
  const int n = g.num_vertices();
  const int m = g.num_edges();
  detail::require(n_walks >= 1, ErrorCode::kInvalidArgument, "need at least one walk");
  detail::require_same_graph(g, a);
  if (rule.kind == StoppingRule::Kind::kNaive) {
    detail::require_size(rule.target.size(), n, "naive-rule target");
  } else if (rule.kind == StoppingRule::Kind::kHitNode) {
    detail::require(rule.node >= 0 && rule.node < n, ErrorCode::kIndexOutOfRange, "hit target out of range");
  } else {
    detail::require(rule.horizon >= 0, ErrorCode::kInvalidArgument, "negative horizon");
    detail::require(rule.horizon <= opt.max_steps, ErrorCode::kHorizonExceeded,
                    "horizon exceeds the per-walk step cap");
  }

  std::vector<double> start_cum(n), target_cum(n);
  for (int i = 0; i < n; ++i) {
    start_cum[i] = a[i] + (i ? start_cum[i - 1] : 0.0);
    if (rule.kind == StoppingRule::Kind::kNaive) target_cum[i] = rule.target[i] + (i ? target_cum[i - 1] : 0.0);
  }
  std::vector<std::vector<double>> step_cum(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const auto& inc : g.neighbors(i)) step_cum[i].push_back(acc += inc.weight);
  }

  constexpr long kBlock = 1024;
  const long n_blocks = (n_walks + kBlock - 1) / kBlock;
  std::vector<detail::BlockTally> tallies(n_blocks);
  std::atomic<long> next_block{0};

  auto worker = [&] {
    std::vector<long long> visit(n, 0);
    std::vector<int> touched;
    for (long blk; (blk = next_block.fetch_add(1)) < n_blocks;) {
      detail::BlockTally t;
      t.stops.assign(n, 0);
      t.traversals.assign(m, 0);
      t.visits.assign(n, 0);
      t.y_sum = Vector::Zero(n);
      t.y_sq = Vector::Zero(n);
      Vector y = Vector::Zero(n);
      const long end = std::min(n_walks, (blk + 1) * kBlock);
      for (long walk = blk * kBlock; walk < end; ++walk) {
        detail::SplitMix64 rng(detail::walk_stream_seed(seed, static_cast<std::uint64_t>(walk)));
        int x = detail::sample_cumulative(start_cum, rng.uniform());
        int target = -1;
        if (rule.kind == StoppingRule::Kind::kNaive) target = detail::sample_cumulative(target_cum, rng.uniform());
        if (rule.kind == StoppingRule::Kind::kHitNode) target = rule.node;
        long steps = 0;
        auto stop_now = [&] {
          return rule.kind == StoppingRule::Kind::kHorizon ? steps == rule.horizon : x == target;
        };
        while (!stop_now()) {
          if (steps >= opt.max_steps) {
            throw Error(ErrorCode::kHorizonExceeded,
                        "walk " + std::to_string(walk) + " exceeded " + std::to_string(opt.max_steps) + " steps");
          }
          if (visit[x]++ == 0) touched.push_back(x);
          const auto nbrs = g.neighbors(x);
          const auto& inc = nbrs[detail::sample_cumulative(step_cum[x], rng.uniform())];
          ++t.traversals[inc.edge];
          x = inc.neighbor;
          ++steps;
        }
        ++t.stops[x];
        t.length_sum += static_cast<double>(steps);
        t.length_sq += static_cast<double>(steps) * static_cast<double>(steps);
        // y = L D⁻¹ v for this walk's visit vector v.
        for (int i : touched) {
          y[i] += static_cast<double>(visit[i]);
          for (const auto& inc : g.neighbors(i)) {
            y[inc.neighbor] -= inc.weight * static_cast<double>(visit[i]) / g.degree(i);
          }
        }
        // Accumulate over the support of y (touched vertices and their neighbors).
        auto add = [&](int i) {
          if (y[i] != 0.0) {
            t.y_sum[i] += y[i];
            t.y_sq[i] += y[i] * y[i];
            y[i] = 0.0;
          }
        };
        for (int i : touched) {
          add(i);
          for (const auto& inc : g.neighbors(i)) add(inc.neighbor);
        }
        for (int i : touched) {
          t.visits[i] += visit[i];
          visit[i] = 0;
        }
        touched.clear();
      }
      tallies[blk] = std::move(t);
    }
  };

  const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(n_blocks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next_block = n_blocks;
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  SimulationReport r;
  r.n_walks = n_walks;
  r.seed = seed;
  r.start = a.mass();
  r.target_law = stopping_law(g, a, rule);
  r.stop_counts.assign(n, 0);
  r.edge_traversals.assign(m, 0);
  r.visits.assign(n, 0);
  double length_sum = 0.0, length_sq = 0.0;
  Vector y_sum = Vector::Zero(n), y_sq = Vector::Zero(n);
  for (const auto& t : tallies) {
    for (int i = 0; i < n; ++i) {
      r.stop_counts[i] += t.stops[i];
      r.visits[i] += t.visits[i];
    }
    for (int k = 0; k < m; ++k) r.edge_traversals[k] += t.traversals[k];
    length_sum += t.length_sum;
    length_sq += t.length_sq;
    y_sum += t.y_sum;
    y_sq += t.y_sq;
  }
  const double nw = static_cast<double>(n_walks);
  r.mean_length = length_sum / nw;
  const double var = n_walks > 1 ? std::max(0.0, (length_sq - nw * r.mean_length * r.mean_length) / (nw - 1.0)) : 0.0;
  r.length_se = std::sqrt(var / nw);
  r.exit_frequency.resize(n);
  r.exit_residual_se.resize(n);
  for (int i = 0; i < n; ++i) {
    r.exit_frequency[i] = static_cast<double>(r.visits[i]) / (nw * g.degree(i));
    const double mean = y_sum[i] / nw;
    const double v = n_walks > 1 ? std::max(0.0, (y_sq[i] - nw * mean * mean) / (nw - 1.0)) : 0.0;
    r.exit_residual_se[i] = std::sqrt(v / nw);
  }
  return r;
}

/// Empirical stopping distribution.
inline Vector stop_distribution(const SimulationReport& r) {
  Vector out(static_cast<Eigen::Index>(r.stop_counts.size()));
  for (std::size_t i = 0; i < r.stop_counts.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = static_cast<double>(r.stop_counts[i]) / static_cast<double>(r.n_walks);
  }
  return out;
}

struct ExitFrequencyCheck {
  double residual = 0.0;         // ‖L f̂ − (α−β)‖_∞
  double worst_ratio = 0.0;      // max_i |residual_i| / SE_i
  bool within_five_se = false;   // every |residual_i| ≤ 5 SE_i
  double potential_error = 0.0;  // ‖(f̂ − mean f̂) − L†(α−β)‖_∞
};

/// Compares the estimated exit frequencies with L f = α − β. The report must
/// come from a rule whose stopping law is b.
inline ExitFrequencyCheck exit_frequency_check(const WeightedGraph& g, const SimulationReport& report,
                                               const Measure& a, const Measure& b) {
  const int n = g.num_vertices();
  const Vector d = mass_difference(n, a, b);
  detail::require_size(report.exit_frequency.size(), n, "simulation report");
  detail::require((report.target_law - b.mass()).cwiseAbs().maxCoeff() <= 1e-9 &&
                      (report.start - a.mass()).cwiseAbs().maxCoeff() <= 1e-9,
                  ErrorCode::kRuleMismatch, "the simulated rule does not start at a and stop in law b");
  const Vector res = laplacian_apply(g, report.exit_frequency) - d;
  ExitFrequencyCheck out;
  out.residual = res.cwiseAbs().maxCoeff();
  out.within_five_se = true;
  for (int i = 0; i < n; ++i) {
    const double se = report.exit_residual_se[i];
    const double err = std::abs(res[i]);
    if (se > 0.0) out.worst_ratio = std::max(out.worst_ratio, err / se);
    if (err > 5.0 * se + 1e-12) out.within_five_se = false;
  }
  // Grounded potential solve for L†(α−β) on the conductance Laplacian.
  const Matrix lap = dense_laplacian(g);
  Vector f = Vector::Zero(n);
  if (n > 1) f.tail(n - 1) = lap.bottomRightCorner(n - 1, n - 1).ldlt().solve(d.tail(n - 1));
  f.array() -= f.mean();
  Vector est = report.exit_frequency;
  est.array() -= est.mean();
  out.potential_error = (est - f).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace graphot

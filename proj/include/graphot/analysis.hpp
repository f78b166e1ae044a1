#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "graphot/beckmann.hpp"
#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"
#include "graphot/random_walk.hpp"
#include "graphot/spectral.hpp"
#include "graphot/transport.hpp"

namespace graphot {

/// One checked inequality left ≤ right.
struct BoundReport {
  std::string id;
  double left = 0.0;
  double right = 0.0;
  double slack = 0.0;  // right − left
  bool skipped = false;
  std::string note;
  std::vector<std::pair<std::string, double>> constants;

  bool holds(double tol = 1e-9) const { return skipped || slack >= -tol; }
};

/// max_e w_e^{1/p − 1}.
inline double constant_cwp(const WeightedGraph& g, double p) {
  double c = 0.0;
  for (const auto& e : g.edges()) c = std::max(c, std::pow(e.weight, 1.0 / p - 1.0));
  return c;
}

/// m^{1 − 1/p} · (max_e w_e)^{(p−1)/p}.
inline double constant_cwmp(const WeightedGraph& g, double p) {
  return std::pow(g.num_edges(), 1.0 - 1.0 / p) * std::pow(g.max_weight(), (p - 1.0) / p);
}

namespace detail {

inline BoundReport make_bound(std::string id, double left, double right,
                              std::vector<std::pair<std::string, double>> constants = {}) {
  BoundReport r;
  r.id = std::move(id);
  r.left = left;
  r.right = right;
  r.slack = right - left;
  r.constants = std::move(constants);
  return r;
}

inline BoundReport skipped_bound(std::string id, std::string note) {
  BoundReport r;
  r.id = std::move(id);
  r.skipped = true;
  r.note = std::move(note);
  return r;
}

}  // namespace detail

/// Evaluates every Beckmann/Wasserstein comparison for the pair (a, b) at
/// exponent p. Hypothesis violations are reported as skipped entries.
inline std::vector<BoundReport> verify_bounds(const WeightedGraph& g, const Measure& a, const Measure& b,
                                              double p) {
  detail::require(p >= 1.0 && std::isfinite(p), ErrorCode::kInvalidArgument, "p must be >= 1");
  const int n = g.num_vertices();
  const int m = g.num_edges();
  const PathMetric d1 = shortest_path_metric(g, 1.0);
  const SpectralData transport = decompose_transport(g);

  const double b1 = beckmann_p1(g, a, b).distance;
  const double bp = p == 1.0 ? b1 : beckmann_general(g, a, b, p).distance;
  const double b2 = beckmann_p2(transport, a, b).distance;
  const double w1 = wasserstein(d1, a, b, 1.0).distance;
  const double wp = p == 1.0 ? w1 : wasserstein(d1, a, b, p).distance;
  const double wr1 = wasserstein(resistance_matrix(transport), a, b, 1.0).distance;
  const double cwp = constant_cwp(g, p);
  const double cwmp = constant_cwmp(g, p);
  const double cw2 = constant_cwp(g, 2.0);
  const double cwm2 = constant_cwmp(g, 2.0);

  std::vector<BoundReport> out;
  if (g.min_weight() >= 1.0) {
    out.push_back(detail::make_bound("bp_le_wpp", bp, std::pow(wp, p)));
  } else {
    out.push_back(detail::skipped_bound("bp_le_wpp", "requires every edge weight >= 1"));
  }
  if (p > 1.0) {
    const double q = p / (p - 1.0);
    const double factor = std::pow(static_cast<double>(n), 2.0 / q);
    const double wdp = wasserstein(shortest_path_metric(g, p), a, b, p).distance;
    out.push_back(detail::make_bound("bp_le_n2q_wdpp", bp, factor * wdp, {{"n^(2/q)", factor}}));
  }
  out.push_back(detail::make_bound("bp_le_cwp_b1", bp, cwp * b1, {{"C_wp", cwp}}));
  out.push_back(detail::make_bound("bp_le_cwp_w1", bp, cwp * w1, {{"C_wp", cwp}}));
  out.push_back(detail::make_bound("b1_le_cwmp_bp", b1, cwmp * bp, {{"C_wmp", cwmp}}));
  out.push_back(detail::make_bound("w1_le_cwmp_bp", w1, cwmp * bp, {{"C_wmp", cwmp}}));
  out.push_back(detail::make_bound("b2_le_cw2_w1", b2, cw2 * w1, {{"C_w2", cw2}}));
  out.push_back(detail::make_bound("cw2_w1_le_cw2_cwm2_b2", cw2 * w1, cw2 * cwm2 * b2,
                                   {{"C_w2", cw2}, {"C_wm2", cwm2}}));
  out.push_back(detail::make_bound("b2_le_sqrt_wr1", b2, std::sqrt(wr1)));
  if (g.is_unit_weighted()) {
    const double root_m = std::sqrt(static_cast<double>(m));
    out.push_back(detail::make_bound("unweighted_b2_le_w1", b2, w1));
    out.push_back(detail::make_bound("unweighted_w1_le_sqrtm_b2", w1, root_m * b2, {{"m^(1/2)", root_m}}));
  } else {
    out.push_back(detail::skipped_bound("unweighted_b2_le_w1", "graph is weighted"));
    out.push_back(detail::skipped_bound("unweighted_w1_le_sqrtm_b2", "graph is weighted"));
  }
  return out;
}

/// r_αβ against access times and naive-rule durations, conductance Laplacian.
inline std::vector<BoundReport> verify_commute_inequalities(const WalkStats& ws, const SpectralData& s,
                                                            const Measure& a, const Measure& b) {
  const double r = measure_resistance(s, a, b);
  const double vol = ws.volume;
  const double hab = access_time(ws, a, b);
  const double hba = access_time(ws, b, a);
  const double nab = naive_access_time(ws, a, b);
  const double nba = naive_access_time(ws, b, a);
  return {
      detail::make_bound("r_le_2_max_access", r, 2.0 / vol * std::max(hab, hba)),
      detail::make_bound("r_le_naive_commute", r, (nab + nba) / vol),
  };
}

/// Gauss–Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count) {
  detail::require(count >= 1, ErrorCode::kInvalidArgument, "need at least one quadrature node");
  std::vector<double> x(count), w(count);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < count; ++i) {
    double z = std::cos(pi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= count; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = count * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Piecewise curve t ↦ μ_t through `points` at `times`. A segment with a
/// control measure is a quadratic Bézier arc, otherwise it is linear.
struct CurveSpec {
  std::vector<double> times;                 // strictly increasing, from 0 to 1
  std::vector<Vector> points;                // μ at each time
  std::vector<std::optional<Vector>> controls;  // per segment; may be empty
  int nodes = 8;                             // Gauss–Legendre nodes per segment

  static CurveSpec linear(const Measure& a, const Measure& b) {
    return {{0.0, 1.0}, {a.mass(), b.mass()}, {}, 8};
  }
};

struct BenamouBrenierResult {
  double action = 0.0;
  double b2_squared = 0.0;
  double gap = 0.0;  // action − B₂²
};

/// ∫₀¹ ‖dμ_t‖²_{Ḣ⁻¹} dt by Gauss–Legendre quadrature on each segment,
/// compared with (α−β)ᵀL†(α−β) for the curve's endpoints.
inline BenamouBrenierResult benamou_brenier(const SpectralData& s, const CurveSpec& curve,
                                            const Measure& a, const Measure& b) {
  const int n = s.size();
  const std::size_t segs = curve.points.size() - 1;
  detail::require(curve.points.size() >= 2 && curve.times.size() == curve.points.size(),
                  ErrorCode::kInvalidCurve, "curve needs matching times and points");
  detail::require(curve.controls.empty() || curve.controls.size() == segs, ErrorCode::kInvalidCurve,
                  "one control slot per segment");
  detail::require(std::abs(curve.times.front()) <= 1e-12 && std::abs(curve.times.back() - 1.0) <= 1e-12,
                  ErrorCode::kInvalidCurve, "curve must run over [0, 1]");
  auto check_measure = [&](const Vector& v, const char* what) {
    detail::require(v.size() == n, ErrorCode::kInvalidCurve, std::string(what) + " has the wrong length");
    detail::require(v.minCoeff() >= 0.0, ErrorCode::kInvalidCurve, std::string(what) + " has negative mass");
    detail::require(std::abs(v.sum() - 1.0) <= Measure::kSumTolerance, ErrorCode::kInvalidCurve,
                    std::string(what) + " does not have unit mass");
  };
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    check_measure(curve.points[k], "curve point");
    if (k > 0) {
      detail::require(curve.times[k] > curve.times[k - 1], ErrorCode::kInvalidCurve, "times must increase");
    }
  }
  for (const auto& c : curve.controls) {
    if (c) check_measure(*c, "control measure");
  }
  detail::require((curve.points.front() - a.mass()).cwiseAbs().maxCoeff() <= 1e-9 &&
                      (curve.points.back() - b.mass()).cwiseAbs().maxCoeff() <= 1e-9,
                  ErrorCode::kInvalidCurve, "curve endpoints do not match the measures");

  const auto [x, w] = gauss_legendre(curve.nodes);
  BenamouBrenierResult out;
  for (std::size_t k = 0; k < segs; ++k) {
    const double dt = curve.times[k + 1] - curve.times[k];
    const Vector& p0 = curve.points[k];
    const Vector& p1 = curve.points[k + 1];
    const bool bezier = !curve.controls.empty() && curve.controls[k].has_value();
    double seg = 0.0;
    if (!bezier) {
      const Vector v = p1 - p0;
      seg = v.dot(pinv_apply(s, v));
    } else {
      const Vector& c = *curve.controls[k];
      for (std::size_t i = 0; i < x.size(); ++i) {
        const Vector v = 2.0 * (1.0 - x[i]) * (c - p0) + 2.0 * x[i] * (p1 - c);
        seg += w[i] * v.dot(pinv_apply(s, v));
      }
    }
    out.action += seg / dt;
  }
  out.b2_squared = measure_resistance(s, a, b);
  out.gap = out.action - out.b2_squared;
  return out;
}

struct SeparationReport {
  std::vector<int> mutual_support;
  double delta = 0.0;
  double margin = 0.0;  // half the distance between the embedded convex hulls
  Vector normal;        // unit w
  double offset = 0.0;  // b, with w·x + b > 0 on the first cloud
  double min_embedded_distance = 0.0;
  double min_raw_distance = 0.0;
  double raw_lower_bound = 0.0;  // ‖α₁ − α₂‖₂ − 2δ
  bool separated = false;
  int iterations = 0;
};

namespace detail {

/// Nearest points of conv(X) and conv(Y) (columns) by pairwise mass moves
/// inside each simplex. Returns (λ, μ).
inline std::pair<Vector, Vector> nearest_hull_points(const Matrix& xs, const Matrix& ys, int& iterations,
                                                     double tol = 1e-10, int max_iter = 2'000'000) {
  const Eigen::Index nx = xs.cols(), ny = ys.cols();
  Vector lam = Vector::Zero(nx), mu = Vector::Zero(ny);
  lam[0] = 1.0;
  mu[0] = 1.0;
  Vector z = xs.col(0) - ys.col(0);
  const double scale = std::max({1.0, xs.cwiseAbs().maxCoeff(), ys.cwiseAbs().maxCoeff()});
  const double thresh = tol * scale * scale;

  // One move inside a simplex; sign = +1 for X, −1 for Y.
  auto sweep = [&](const Matrix& pts, Vector& coef, double sign) {
    const Vector grad = sign * (pts.transpose() * z);
    Eigen::Index lo = 0, hi = -1;
    grad.minCoeff(&lo);
    for (Eigen::Index i = 0; i < coef.size(); ++i) {
      if (coef[i] > 0.0 && (hi < 0 || grad[i] > grad[hi])) hi = i;
    }
    const double spread = grad[hi] - grad[lo];
    if (spread <= thresh || hi == lo) return spread;
    const Vector dir = sign * (pts.col(lo) - pts.col(hi));
    const double dd = dir.squaredNorm();
    if (dd <= 0.0) return 0.0;
    const double t = std::clamp(-z.dot(dir) / dd, 0.0, coef[hi]);
    coef[lo] += t;
    coef[hi] -= t;
    if (coef[hi] < 1e-300) coef[hi] = 0.0;
    z += t * dir;
    return spread;
  };

  for (iterations = 0; iterations < max_iter; ++iterations) {
    const double sx = sweep(xs, lam, 1.0);
    const double sy = sweep(ys, mu, -1.0);
    if (sx <= thresh && sy <= thresh) break;
    if (iterations % 1024 == 0) z = xs * lam - ys * mu;  // limit drift
  }
  return {lam, mu};
}

}  // namespace detail

/// Perturbs α₁ and α₂ on their mutual support, embeds both clouds with
/// L^{-1/2} and finds the maximum-margin separating hyperplane.
inline SeparationReport separability_check(const SpectralData& s, const Measure& a1, const Measure& a2,
                                           int n_samples, std::uint64_t seed, double perturbation_scale = 1.0) {
  const int n = s.size();
  detail::require_size(a1.size(), n, "first measure");
  detail::require_size(a2.size(), n, "second measure");
  detail::require(n_samples >= 1, ErrorCode::kInvalidArgument, "need at least one sample per cloud");
  SeparationReport out;
  for (int i = 0; i < n; ++i) {
    if (a1[i] > 0.0 && a2[i] > 0.0) out.mutual_support.push_back(i);
  }
  detail::require(!out.mutual_support.empty(), ErrorCode::kHypothesisFailure, "mutual support is empty");
  const double gap = (a1.mass() - a2.mass()).norm();
  double floor_mass = std::numeric_limits<double>::infinity();
  for (int i : out.mutual_support) floor_mass = std::min({floor_mass, a1[i], a2[i]});
  out.delta = std::min(gap / 3.0, floor_mass);
  detail::require(out.delta > 0.0, ErrorCode::kHypothesisFailure, "delta is not positive (equal measures?)");
  out.raw_lower_bound = gap - 2.0 * out.delta;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto perturbed = [&](const Measure& base) {
    Vector v = base.mass();
    if (out.mutual_support.size() < 2 || perturbation_scale == 0.0) return v;
    Vector dt(static_cast<Eigen::Index>(out.mutual_support.size()));
    for (Eigen::Index k = 0; k < dt.size(); ++k) dt[k] = normal(rng);
    dt.array() -= dt.mean();
    const double l1 = dt.cwiseAbs().sum();
    if (l1 == 0.0) return v;
    dt *= perturbation_scale * 0.999 * out.delta * unit(rng) / l1;
    for (Eigen::Index k = 0; k < dt.size(); ++k) v[out.mutual_support[k]] += dt[k];
    return v;
  };
  Matrix raw1(n, n_samples), raw2(n, n_samples);
  for (int k = 0; k < n_samples; ++k) raw1.col(k) = perturbed(a1);
  for (int k = 0; k < n_samples; ++k) raw2.col(k) = perturbed(a2);
  const Matrix half = s.inv_sqrt_matrix();
  const Matrix x1 = half * raw1;
  const Matrix x2 = half * raw2;

  auto min_pair_distance = [](const Matrix& p, const Matrix& q) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      for (Eigen::Index j = 0; j < q.cols(); ++j) best = std::min(best, (p.col(i) - q.col(j)).norm());
    }
    return best;
  };
  out.min_raw_distance = min_pair_distance(raw1, raw2);
  out.min_embedded_distance = min_pair_distance(x1, x2);

  const auto [lam, mu] = detail::nearest_hull_points(x1, x2, out.iterations);
  const Vector p = x1 * lam;
  const Vector q = x2 * mu;
  const Vector z = p - q;
  const double dist = z.norm();
  out.margin = 0.5 * dist;
  if (dist > 0.0) {
    out.normal = z / dist;
    out.offset = -out.normal.dot(0.5 * (p + q));
    const double lo1 = (x1.transpose() * out.normal).minCoeff() + out.offset;
    const double hi2 = (x2.transpose() * out.normal).maxCoeff() + out.offset;
    out.separated = lo1 > 0.0 && hi2 < 0.0;
  } else {
    out.normal = Vector::Zero(n);
  }
  return out;
}

}  // namespace graphot

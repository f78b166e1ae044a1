#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"

namespace graphot {

/// Transportation coupling π with row sums α and column sums β.
struct Coupling {
  Matrix plan;
};

/// Throws InvalidCoupling unless π ≥ 0, π1 = α and 1ᵀπ = βᵀ within tol.
inline void check_coupling(const Matrix& plan, const Measure& a, const Measure& b,
                           double tol = 1e-9) {
  detail::require(plan.rows() == a.size() && plan.cols() == b.size(), ErrorCode::kInvalidCoupling,
                  "coupling shape does not match the marginals");
  detail::require(plan.minCoeff() >= -tol, ErrorCode::kInvalidCoupling, "negative coupling entry");
  detail::require((plan.rowwise().sum() - a.mass()).cwiseAbs().maxCoeff() <= tol,
                  ErrorCode::kInvalidCoupling, "row sums differ from the first marginal");
  detail::require((plan.colwise().sum().transpose() - b.mass()).cwiseAbs().maxCoeff() <= tol,
                  ErrorCode::kInvalidCoupling, "column sums differ from the second marginal");
}

/// Product coupling αβᵀ.
inline Coupling naive_coupling(const Measure& a, const Measure& b) {
  return {a.mass() * b.mass().transpose()};
}

/// Exact solution of a balanced transportation problem.
struct TransportPlan {
  Matrix plan;          // supply.size() × demand.size()
  Vector row_potential;  // u
  Vector col_potential;  // v, with u_i + v_j ≤ c_ij at optimality
  double cost = 0.0;     // Σ π_ij c_ij
  double min_reduced_cost = 0.0;
  int pivots = 0;
};

namespace detail {

/// Transportation simplex (MODI / u-v method) on a dense cost matrix.
/// The basis is a spanning tree of m + k − 1 cells; degenerate (zero-flow)
/// basic cells stay in the tree.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
      : m_(static_cast<int>(supply.size())), k_(static_cast<int>(demand.size())), cost_(cost),
        flow_(static_cast<std::size_t>(m_) * k_, 0.0), basic_(flow_.size(), 0),
        row_cells_(m_), col_cells_(k_) {
    vogel(supply, demand);
  }

  void solve() {
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const long max_pivots = 200L * (m_ + k_) * (m_ + k_) + 1000;
    int degenerate_run = 0;
    for (;;) {
      compute_potentials();
      int enter = -1;
      double best = -tol;
      const bool bland = degenerate_run > 2 * (m_ + k_);
      for (int i = 0; i < m_ && !(bland && enter >= 0); ++i) {
        for (int j = 0; j < k_; ++j) {
          const int cell = i * k_ + j;
          if (basic_[cell]) continue;
          const double r = cost_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            enter = cell;
            if (bland) break;
          }
        }
      }
      if (enter < 0) break;
      if (pivots_ >= max_pivots) {
        throw Error(ErrorCode::kNoConvergence, "transportation simplex exceeded its pivot cap");
      }
      const double theta = pivot(enter);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
      ++pivots_;
    }
  }

  TransportPlan result() const {
    TransportPlan out;
    out.plan = Matrix::Zero(m_, k_);
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < k_; ++j) out.plan(i, j) = std::max(0.0, flow_[i * k_ + j]);
    }
    out.row_potential = Eigen::Map<const Vector>(u_.data(), m_);
    out.col_potential = Eigen::Map<const Vector>(v_.data(), k_);
    out.cost = (out.plan.array() * cost_.array()).sum();
    double rmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < k_; ++j) rmin = std::min(rmin, cost_(i, j) - u_[i] - v_[j]);
    }
    out.min_reduced_cost = rmin;
    out.pivots = pivots_;
    return out;
  }

 private:
  void add_basic(int i, int j, double amount) {
    const int cell = i * k_ + j;
    flow_[cell] = amount;
    basic_[cell] = 1;
    row_cells_[i].push_back(j);
    col_cells_[j].push_back(i);
  }

  void remove_basic(int i, int j) {
    const int cell = i * k_ + j;
    basic_[cell] = 0;
    flow_[cell] = 0.0;
    std::erase(row_cells_[i], j);
    std::erase(col_cells_[j], i);
  }

  // Vogel's approximation. Exactly one line is crossed out per allocation,
  // so the initial basis always has m + k − 1 cells and is a tree.
  void vogel(const Vector& supply, const Vector& demand) {
    std::vector<double> s(supply.data(), supply.data() + m_);
    std::vector<double> d(demand.data(), demand.data() + k_);
    std::vector<char> row_on(m_, 1), col_on(k_, 1);
    int rows_left = m_;
    int cols_left = k_;
    const double inf = std::numeric_limits<double>::infinity();

    auto two_smallest = [](double& lo1, double& lo2, double c) {
      if (c < lo1) {
        lo2 = lo1;
        lo1 = c;
      } else if (c < lo2) {
        lo2 = c;
      }
    };

    while (rows_left > 1 && cols_left > 1) {
      double best_penalty = -1.0;
      int line = -1;
      bool line_is_row = true;
      for (int i = 0; i < m_; ++i) {
        if (!row_on[i]) continue;
        double lo1 = inf, lo2 = inf;
        for (int j = 0; j < k_; ++j) {
          if (col_on[j]) two_smallest(lo1, lo2, cost_(i, j));
        }
        if (lo2 - lo1 > best_penalty) {
          best_penalty = lo2 - lo1;
          line = i;
          line_is_row = true;
        }
      }
      for (int j = 0; j < k_; ++j) {
        if (!col_on[j]) continue;
        double lo1 = inf, lo2 = inf;
        for (int i = 0; i < m_; ++i) {
          if (row_on[i]) two_smallest(lo1, lo2, cost_(i, j));
        }
        if (lo2 - lo1 > best_penalty) {
          best_penalty = lo2 - lo1;
          line = j;
          line_is_row = false;
        }
      }
      int bi = -1, bj = -1;
      double best_cost = inf;
      if (line_is_row) {
        bi = line;
        for (int j = 0; j < k_; ++j) {
          if (col_on[j] && cost_(bi, j) < best_cost) {
            best_cost = cost_(bi, j);
            bj = j;
          }
        }
      } else {
        bj = line;
        for (int i = 0; i < m_; ++i) {
          if (row_on[i] && cost_(i, bj) < best_cost) {
            best_cost = cost_(i, bj);
            bi = i;
          }
        }
      }
      const double amount = std::min(s[bi], d[bj]);
      add_basic(bi, bj, amount);
      if (s[bi] <= d[bj]) {
        d[bj] = std::max(0.0, d[bj] - s[bi]);
        s[bi] = 0.0;
        row_on[bi] = 0;
        --rows_left;
      } else {
        s[bi] -= d[bj];
        d[bj] = 0.0;
        col_on[bj] = 0;
        --cols_left;
      }
    }
    // A single row or column remains: it absorbs everything that is left.
    if (rows_left == 1) {
      int i = 0;
      while (!row_on[i]) ++i;
      for (int j = 0; j < k_; ++j) {
        if (col_on[j]) add_basic(i, j, std::max(0.0, d[j]));
      }
    } else {
      int j = 0;
      while (!col_on[j]) ++j;
      for (int i = 0; i < m_; ++i) {
        if (row_on[i]) add_basic(i, j, std::max(0.0, s[i]));
      }
    }
  }

  // Solves u_i + v_j = c_ij on the basis tree, rooted at u_0 = 0.
  void compute_potentials() {
    u_.assign(m_, 0.0);
    v_.assign(k_, 0.0);
    std::vector<char> row_seen(m_, 0), col_seen(k_, 0);
    std::vector<int> stack{0};  // rows encoded as i, columns as m_ + j
    row_seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (int j : row_cells_[node]) {
          if (col_seen[j]) continue;
          col_seen[j] = 1;
          v_[j] = cost_(node, j) - u_[node];
          stack.push_back(m_ + j);
        }
      } else {
        const int j = node - m_;
        for (int i : col_cells_[j]) {
          if (row_seen[i]) continue;
          row_seen[i] = 1;
          u_[i] = cost_(i, j) - v_[j];
          stack.push_back(i);
        }
      }
    }
  }

  // Brings `enter` into the basis along its unique tree cycle and returns
  // the amount shifted.
  double pivot(int enter) {
    const int ei = enter / k_;
    const int ej = enter % k_;
    // Tree path from row ei to column ej.
    const int nodes = m_ + k_;
    std::vector<int> parent(nodes, -2);
    std::vector<int> queue{ei};
    parent[ei] = -1;
    for (std::size_t head = 0; head < queue.size() && parent[m_ + ej] == -2; ++head) {
      const int node = queue[head];
      if (node < m_) {
        for (int j : row_cells_[node]) {
          if (parent[m_ + j] == -2) {
            parent[m_ + j] = node;
            queue.push_back(m_ + j);
          }
        }
      } else {
        for (int i : col_cells_[node - m_]) {
          if (parent[i] == -2) {
            parent[i] = node;
            queue.push_back(i);
          }
        }
      }
    }
    // Walk back from column ej; cells alternate −, +, −, ...
    std::vector<int> minus_cells, plus_cells;
    int node = m_ + ej;
    bool minus = true;
    while (parent[node] != -1) {
      const int prev = parent[node];
      const int row = node < m_ ? node : prev;
      const int col = node < m_ ? prev - m_ : node - m_;
      (minus ? minus_cells : plus_cells).push_back(row * k_ + col);
      minus = !minus;
      node = prev;
    }
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (int cell : minus_cells) {
      if (flow_[cell] < theta || (flow_[cell] == theta && cell < leave)) {
        theta = flow_[cell];
        leave = cell;
      }
    }
    theta = std::max(0.0, theta);
    for (int cell : minus_cells) flow_[cell] -= theta;
    for (int cell : plus_cells) flow_[cell] += theta;
    remove_basic(leave / k_, leave % k_);
    add_basic(ei, ej, theta);
    return theta;
  }

  int m_;
  int k_;
  Matrix cost_;
  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<std::vector<int>> row_cells_;
  std::vector<std::vector<int>> col_cells_;
  std::vector<double> u_;
  std::vector<double> v_;
  int pivots_ = 0;
};

}  // namespace detail

/// Minimizes Σ π_ij c_ij over couplings of supply and demand (equal totals).
inline TransportPlan solve_transport(const Vector& supply, const Vector& demand,
                                     const Matrix& cost) {
  detail::require(cost.rows() == supply.size() && cost.cols() == demand.size(),
                  ErrorCode::kDimensionMismatch, "cost matrix shape does not match marginals");
  detail::require(supply.size() > 0 && demand.size() > 0, ErrorCode::kDimensionMismatch,
                  "empty marginal");
  detail::TransportSimplex simplex(supply, demand, cost);
  simplex.solve();
  return simplex.result();
}

struct WassersteinResult {
  double distance = 0.0;
  Coupling coupling;
  Vector row_potential;
  Vector col_potential;
  double min_reduced_cost = 0.0;
};

/// (k,p)-Wasserstein distance for an arbitrary vertex metric k (dense n×n).
/// The LP is solved on the supports of α and β only.
inline WassersteinResult wasserstein(const Matrix& metric, const Measure& a, const Measure& b,
                                     double p) {
  const int n = a.size();
  detail::require(p >= 1.0 && std::isfinite(p), ErrorCode::kInvalidArgument, "wasserstein needs p >= 1");
  detail::require_size(b.size(), n, "second measure");
  detail::require(metric.rows() == n && metric.cols() == n, ErrorCode::kDimensionMismatch,
                  "metric is not n×n");

  WassersteinResult out;
  if (a.mass() == b.mass()) {
    out.coupling.plan = a.mass().asDiagonal();
    out.row_potential = Vector::Zero(n);
    out.col_potential = Vector::Zero(n);
    return out;
  }

  std::vector<int> rows, cols;
  for (int i = 0; i < n; ++i) {
    if (a[i] > 0.0) rows.push_back(i);
    if (b[i] > 0.0) cols.push_back(i);
  }
  const int m = static_cast<int>(rows.size());
  const int k = static_cast<int>(cols.size());
  Vector supply(m), demand(k);
  Matrix cost(m, k);
  for (int r = 0; r < m; ++r) supply[r] = a[rows[r]];
  for (int c = 0; c < k; ++c) demand[c] = b[cols[c]];
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < k; ++c) cost(r, c) = p == 1.0 ? metric(rows[r], cols[c]) : std::pow(metric(rows[r], cols[c]), p);
  }
  // Absorb the (≤ 2e-9) rounding imbalance into the largest demand.
  Eigen::Index big = 0;
  demand.maxCoeff(&big);
  demand[big] += supply.sum() - demand.sum();

  const TransportPlan plan = solve_transport(supply, demand, cost);

  out.coupling.plan = Matrix::Zero(n, n);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < k; ++c) out.coupling.plan(rows[r], cols[c]) = plan.plan(r, c);
  }
  out.row_potential = Vector::Zero(n);
  out.col_potential = Vector::Zero(n);
  std::vector<char> in_cols(n, 0), in_rows(n, 0);
  for (int c = 0; c < k; ++c) {
    out.col_potential[cols[c]] = plan.col_potential[c];
    in_cols[cols[c]] = 1;
  }
  for (int r = 0; r < m; ++r) {
    out.row_potential[rows[r]] = plan.row_potential[r];
    in_rows[rows[r]] = 1;
  }
  auto cost_of = [&](int i, int j) { return p == 1.0 ? metric(i, j) : std::pow(metric(i, j), p); };
  // Zero-mass rows and columns carry no constraint; pick the largest
  // potentials that keep every reduced cost nonnegative.
  for (int j = 0; j < n; ++j) {
    if (in_cols[j]) continue;
    double v = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) v = std::min(v, cost_of(rows[r], j) - out.row_potential[rows[r]]);
    out.col_potential[j] = v;
  }
  for (int i = 0; i < n; ++i) {
    if (in_rows[i]) continue;
    double u = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) u = std::min(u, cost_of(i, j) - out.col_potential[j]);
    out.row_potential[i] = u;
  }
  out.min_reduced_cost = plan.min_reduced_cost;
  out.distance = std::pow(std::max(0.0, plan.cost), 1.0 / p);
  return out;
}

inline WassersteinResult wasserstein(const PathMetric& metric, const Measure& a, const Measure& b,
                                     double p) {
  return wasserstein(metric.matrix(), a, b, p);
}

/// Σ π_ij k(i,j)^p for a given coupling.
inline double coupling_cost(const Matrix& metric, const Matrix& plan, double p) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (plan(i, j) != 0.0) acc += plan(i, j) * std::pow(metric(i, j), p);
    }
  }
  return acc;
}

/// W_p on the unweighted path P_n from the quantile functions:
/// ∫₀¹ |F_α⁻¹(t) − F_β⁻¹(t)|^p dt, summed exactly over merged breakpoints.
inline double wasserstein_path_closed_form(const Measure& a, const Measure& b, double p) {
  detail::require_size(b.size(), a.size(), "second measure");
  detail::require(p >= 1.0, ErrorCode::kInvalidArgument, "p must be >= 1");
  const int n = a.size();
  int i = 0, j = 0;
  double ca = a[0], cb = b[0];  // cumulative mass through the current atoms
  double t = 0.0;
  double acc = 0.0;
  while (i < n && j < n) {
    const double next = std::min(ca, cb);
    if (next > t) acc += (next - t) * std::pow(std::abs(i - j), p);
    t = std::max(t, next);
    if (ca <= cb) {
      if (++i < n) ca += a[i];
    } else {
      if (++j < n) cb += b[j];
    }
    if (t >= 1.0 - 1e-15) break;
  }
  return std::pow(acc, 1.0 / p);
}

inline double wasserstein_path_closed_form(const WeightedGraph& g, const Measure& a,
                                           const Measure& b, double p) {
  detail::require(g.is_unit_path(), ErrorCode::kNotAPath, "graph is not the unweighted path 0-1-...-(n-1)");
  detail::require_size(a.size(), g.num_vertices(), "first measure");
  return wasserstein_path_closed_form(a, b, p);
}

}  // namespace graphot

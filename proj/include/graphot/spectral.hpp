#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"

namespace graphot {

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a dense symmetric matrix.
/// Throws ConvergenceFailure if the off-diagonal mass does not vanish
/// within max_sweeps full sweeps.
inline SymmetricEigen jacobi_eigen(Matrix a, int max_sweeps = 100) {
  detail::require(a.rows() == a.cols(), ErrorCode::kDimensionMismatch, "matrix is not square");
  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();

  auto off_diagonal = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    }
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_diagonal() <= eps * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Negligible next to both diagonal entries: zero it outright.
        if (std::abs(apq) < eps * 1e-3 * std::min(std::abs(a(p, p)), std::abs(a(q, q)))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps && off_diagonal() > eps * scale) {
    throw Error(ErrorCode::kConvergenceFailure,
                "Jacobi iteration did not converge in " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

/// Which edge quantity plays the role of conductance in L = B C Bᵀ.
/// kConductance uses w (the random-walk Laplacian D − A); kResistance uses
/// 1/w, the Laplacian whose pseudoinverse quadratic form is the minimal
/// Σ w J² flow energy.
enum class LaplacianKind { kConductance, kResistance };

/// Eigenpairs of a graph Laplacian plus the operators built from them.
/// Immutable; all member functions are const and thread-safe.
class SpectralData {
 public:
  static constexpr double kZeroThreshold = 1e-9;

  SpectralData(WeightedGraph graph, LaplacianKind kind, SymmetricEigen eig)
      : graph_(std::move(graph)), kind_(kind), values_(std::move(eig.values)),
        vectors_(std::move(eig.vectors)) {
    conductance_ = graph_.weights();
    if (kind_ == LaplacianKind::kResistance) conductance_ = conductance_.cwiseInverse();
    const double lmax = values_.size() ? values_.maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      if (values_[k] < kZeroThreshold * lmax) values_[k] = 0.0;
    }
    if (lmax <= 0.0) values_.setZero();
  }

  const WeightedGraph& graph() const noexcept { return graph_; }
  LaplacianKind kind() const noexcept { return kind_; }
  int size() const noexcept { return static_cast<int>(values_.size()); }
  const Vector& eigenvalues() const noexcept { return values_; }
  const Matrix& eigenvectors() const noexcept { return vectors_; }
  /// Per-edge conductance used to assemble this Laplacian.
  const Vector& conductances() const noexcept { return conductance_; }

  int num_zero_modes() const {
    return static_cast<int>((values_.array() == 0.0).count());
  }

  /// Smallest nonzero eigenvalue (the spectral gap).
  double spectral_gap() const {
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      if (values_[k] > 0.0) return values_[k];
    }
    return 0.0;
  }

  /// U f(Λ) Uᵀ g with f(λ) = λ^power on nonzero modes and 0 on the kernel.
  Vector apply_power(const Vector& g, double power) const {
    detail::require_size(g.size(), size(), "vertex function");
    Vector coeff = vectors_.transpose() * g;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
      coeff[k] = values_[k] > 0.0 ? coeff[k] * std::pow(values_[k], power) : 0.0;
    }
    return vectors_ * coeff;
  }

  Matrix operator_power(double power) const {
    Vector scaled(values_.size());
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      scaled[k] = values_[k] > 0.0 ? std::pow(values_[k], power) : 0.0;
    }
    return vectors_ * scaled.asDiagonal() * vectors_.transpose();
  }

  Matrix laplacian() const { return weighted_laplacian(graph_, conductance_); }
  Matrix pinv_matrix() const { return operator_power(-1.0); }
  Matrix inv_sqrt_matrix() const { return operator_power(-0.5); }

 private:
  WeightedGraph graph_;
  LaplacianKind kind_;
  Vector values_;
  Matrix vectors_;
  Vector conductance_;
};

inline SpectralData decompose(const WeightedGraph& g,
                              LaplacianKind kind = LaplacianKind::kConductance) {
  Vector c = g.weights();
  if (kind == LaplacianKind::kResistance) c = c.cwiseInverse();
  return SpectralData(g, kind, jacobi_eigen(weighted_laplacian(g, c)));
}

/// Spectral data for the Laplacian whose pseudoinverse gives B₂.
inline SpectralData decompose_transport(const WeightedGraph& g) {
  return decompose(g, LaplacianKind::kResistance);
}

/// L†g. Inputs that are not mean-zero are implicitly projected.
inline Vector pinv_apply(const SpectralData& s, const Vector& g) { return s.apply_power(g, -1.0); }

/// L^{-1/2}g with the constant mode dropped.
inline Vector inv_sqrt_apply(const SpectralData& s, const Vector& g) {
  return s.apply_power(g, -0.5);
}

/// r_αβ = (α−β)ᵀ L† (α−β).
inline double measure_resistance(const SpectralData& s, const Measure& a, const Measure& b) {
  const Vector d = mass_difference(s.size(), a, b);
  return std::max(0.0, d.dot(pinv_apply(s, d)));
}

/// All node-pair effective resistances r_ij.
inline Matrix resistance_matrix(const SpectralData& s) {
  const Matrix pinv = s.pinv_matrix();
  const int n = s.size();
  Matrix r(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      r(i, j) = i == j ? 0.0 : std::max(0.0, pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j));
    }
  }
  return r;
}

/// ‖f‖²_{Ḣ¹} = Σ_{(i,j)∈E'} w_ij |f(i) − f(j)|².
inline double sobolev_h1(const WeightedGraph& g, const Vector& f) {
  detail::require_size(f.size(), g.num_vertices(), "vertex function");
  double acc = 0.0;
  for (const auto& e : g.edges()) {
    const double d = f[e.tail] - f[e.head];
    acc += e.weight * d * d;
  }
  return acc;
}

namespace detail {

inline void require_mean_zero(const Vector& g) {
  require(std::abs(g.sum()) <= 1e-9, ErrorCode::kNotMeanZero,
          "vertex function sums to " + std::to_string(g.sum()));
}

}  // namespace detail

/// ‖g‖²_{Ḣ⁻¹} = gᵀL†g for mean-zero g.
inline double sobolev_h1_dual(const SpectralData& s, const Vector& g) {
  detail::require_size(g.size(), s.size(), "vertex function");
  detail::require_mean_zero(g);
  return std::max(0.0, g.dot(pinv_apply(s, g)));
}

/// α ↦ L^{-1/2}α. Euclidean distances between embeddings are B₂ distances
/// when s is built for the transport Laplacian.
inline Vector embed(const SpectralData& s, const Measure& a) {
  detail::require_size(a.size(), s.size(), "measure");
  return inv_sqrt_apply(s, a.mass());
}

/// Σ_{ℓ≥1} c_ℓ²/λ_ℓ with c_ℓ = u_ℓᵀ dα, summed mode by mode.
inline double spectral_perturbation_cost(const SpectralData& s, const Vector& da) {
  detail::require_size(da.size(), s.size(), "perturbation");
  detail::require_mean_zero(da);
  const Vector coeff = s.eigenvectors().transpose() * da;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) {
    if (s.eigenvalues()[k] > 0.0) acc += coeff[k] * coeff[k] / s.eigenvalues()[k];
  }
  return acc;
}

/// λ₁^{-1}‖dα‖²₂, the spectral-gap upper bound on the perturbation cost.
inline double spectral_perturbation_bound(const SpectralData& s, const Vector& da) {
  const double gap = s.spectral_gap();
  return gap > 0.0 ? da.squaredNorm() / gap : 0.0;
}

}  // namespace graphot

#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>

#include "graphot/error.hpp"
#include "graphot/graph.hpp"

namespace graphot {

/// Probability vector on the vertex set. Construction never renormalizes:
/// mass must already sum to one within kSumTolerance.
class Measure {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Measure() = default;

  explicit Measure(Vector mass) : mass_(std::move(mass)) {
    detail::require(mass_.size() >= 1, ErrorCode::kInvalidMeasure, "empty measure");
    for (Eigen::Index i = 0; i < mass_.size(); ++i) {
      detail::require(std::isfinite(mass_[i]) && mass_[i] >= 0.0, ErrorCode::kInvalidMeasure,
                      "negative or non-finite mass at vertex " + std::to_string(i));
    }
    const double total = mass_.sum();
    detail::require(std::abs(total - 1.0) <= kSumTolerance, ErrorCode::kInvalidMeasure,
                    "total mass " + std::to_string(total) + " is not 1");
  }

  Measure(std::initializer_list<double> mass)
      : Measure(Vector(Eigen::Map<const Vector>(mass.begin(), static_cast<Eigen::Index>(mass.size())))) {}

  static Measure dirac(int n, int i) {
    detail::require(i >= 0 && i < n, ErrorCode::kIndexOutOfRange, "dirac index out of range");
    Vector v = Vector::Zero(n);
    v[i] = 1.0;
    return Measure(std::move(v));
  }

  static Measure uniform(int n) { return Measure(Vector::Constant(n, 1.0 / n)); }

  /// Divides a nonnegative vector by its sum.
  static Measure normalized(const Vector& weights) {
    const double total = weights.sum();
    detail::require(total > 0.0, ErrorCode::kInvalidMeasure, "cannot normalize zero mass");
    return Measure(weights / total);
  }

  int size() const noexcept { return static_cast<int>(mass_.size()); }
  const Vector& mass() const noexcept { return mass_; }
  double operator[](int i) const { return mass_[i]; }

 private:
  Vector mass_;
};

namespace detail {

inline void require_same_graph(const WeightedGraph& g, const Measure& a) {
  require_size(a.size(), g.num_vertices(), "measure");
}

}  // namespace detail

/// α − β as a plain vector, checked against the graph size.
inline Vector mass_difference(int n, const Measure& a, const Measure& b) {
  detail::require_size(a.size(), n, "first measure");
  detail::require_size(b.size(), n, "second measure");
  return a.mass() - b.mass();
}

}  // namespace graphot

#pragma once

#include <random>

#include <gtest/gtest.h>

#include "graphot/graphot.hpp"

namespace graphot::testing {

/// Moore-Penrose inverse through Eigen's orthogonal decomposition, kept
/// separate from the library's Jacobi eigensolver.
inline Matrix pinv(const Matrix& m) { return m.completeOrthogonalDecomposition().pseudoInverse(); }

/// B diag(c) Bᵀ assembled from the edge list alone.
inline Matrix laplacian_from_edges(const WeightedGraph& g, bool inverse_weights) {
  const int n = g.num_vertices();
  Matrix l = Matrix::Zero(n, n);
  for (const auto& e : g.edges()) {
    const double c = inverse_weights ? 1.0 / e.weight : e.weight;
    l(e.tail, e.tail) += c;
    l(e.head, e.head) += c;
    l(e.tail, e.head) -= c;
    l(e.head, e.tail) -= c;
  }
  return l;
}

inline double quad_pinv(const Matrix& l, const Vector& d) { return d.dot(pinv(l) * d); }

}  // namespace graphot::testing

#define EXPECT_GRAPHOT_ERROR(statement, expected_code)                  \
  do {                                                                  \
    try {                                                               \
      statement;                                                        \
      ADD_FAILURE() << "expected " << ::graphot::to_string(expected_code); \
    } catch (const ::graphot::Error& err_) {                            \
      EXPECT_EQ(err_.code(), expected_code) << err_.what();             \
    }                                                                   \
  } while (0)

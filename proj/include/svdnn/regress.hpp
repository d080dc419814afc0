#pragma once

#include <cstddef>

#include "svdnn/matrix.hpp"

namespace svdnn {

/// y = weights * x + bias.
struct AffineMap {
  Matrix weights;  // m x n
  Vector bias;     // length m
  /// Numerical rank of the (possibly bias-augmented) design matrix.
  std::size_t rank_used = 0;
};

/// Least-squares fit B = Y X^+, examples as columns. With `with_bias` the
/// design matrix gets an extra unit row whose coefficient column becomes the
/// bias. Over-determined systems give the least-squares optimum,
/// under-determined ones the minimum-Frobenius-norm exact fit.
AffineMap fit_least_squares(const Matrix& x, const Matrix& y, bool with_bias);

/// weights * x + bias broadcast over columns.
Matrix predict(const AffineMap& map, const Matrix& x);

/// Orthogonal projection of x_new onto the column span of x_train, X X^+ x.
Vector project_onto_span(const Matrix& x_train, std::span<const double> x_new);

}  // namespace svdnn

#include "svdnn/regress.hpp"

#include <string>

#include "svdnn/errors.hpp"
#include "svdnn/linalg.hpp"

namespace svdnn {

AffineMap fit_least_squares(const Matrix& x, const Matrix& y, bool with_bias) {
  if (x.cols() != y.cols())
    throw InvalidInput("fit_least_squares: x has " + std::to_string(x.cols()) +
                       " examples, y has " + std::to_string(y.cols()));
  if (x.cols() == 0 || x.rows() == 0 || y.rows() == 0)
    throw InvalidInput("fit_least_squares: empty data");
  require_finite(x, "regression inputs");
  require_finite(y, "regression targets");

  const std::size_t n = x.rows();
  const std::size_t samples = x.cols();
  Matrix design = x;
  if (with_bias) {
    design = Matrix(n + 1, samples);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < samples; ++j) design(i, j) = x(i, j);
    for (std::size_t j = 0; j < samples; ++j) design(n, j) = 1.0;
  }

  const SvdFactors f = svd_decompose(design);
  const double tol = default_rank_tol(design.rows(), design.cols());
  const Matrix coeffs = y * pseudo_inverse(f, tol);

  AffineMap map{Matrix(y.rows(), n), Vector(y.rows(), 0.0), numerical_rank(f, tol)};
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) map.weights(i, j) = coeffs(i, j);
    if (with_bias) map.bias[i] = coeffs(i, n);
  }
  return map;
}

Matrix predict(const AffineMap& map, const Matrix& x) {
  if (x.rows() != map.weights.cols())
    throw InvalidInput("predict: input has " + std::to_string(x.rows()) +
                       " rows, map expects " + std::to_string(map.weights.cols()));
  if (map.bias.size() != map.weights.rows())
    throw InvalidInput("predict: bias length does not match weights");
  Matrix out = map.weights * x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v += map.bias[i];
  return out;
}

Vector project_onto_span(const Matrix& x_train, std::span<const double> x_new) {
  if (x_train.cols() == 0) throw InvalidInput("project_onto_span: no training columns");
  if (x_new.size() != x_train.rows())
    throw InvalidInput("project_onto_span: vector length " + std::to_string(x_new.size()) +
                       " does not match " + std::to_string(x_train.rows()));
  const Matrix pinv = pseudo_inverse(x_train);
  return x_train * (pinv * x_new);
}

}  // namespace svdnn

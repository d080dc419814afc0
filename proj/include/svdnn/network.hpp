#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "svdnn/matrix.hpp"

namespace svdnn {

enum class Activation { symmetric_sigmoid, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Shape of a one-hidden-layer network: n inputs, p hidden units, m outputs.
struct Layout {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t m = 0;

  /// (n + 1) p + (p + 1) m, biases included in both layers.
  std::size_t param_count() const noexcept { return (n + 1) * p + (p + 1) * m; }
  friend bool operator==(const Layout&, const Layout&) = default;
};

struct MlpParams {
  Matrix w_hidden;  // p x n
  Vector b_hidden;  // p
  Matrix w_out;     // m x p
  Vector b_out;     // m
  Activation activation = Activation::symmetric_sigmoid;

  /// All-zero parameters of the given shape.
  static MlpParams zeros(const Layout& layout, Activation activation);

  Layout layout() const noexcept { return {w_hidden.cols(), w_hidden.rows(), w_out.rows()}; }
  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Parameters laid out as w_hidden (row-major), b_hidden, w_out (row-major),
/// b_out. Every optimizer works on this representation.
struct FlatVector {
  Vector values;
  Layout layout;
};

/// Logistic sigmoid 1 / (1 + e^-x).
double logistic(double x);
double logistic_derivative(double x);

/// Symmetric sigmoid 2 s(2x) - 1 (identical to tanh) or the identity.
double activation_eval(Activation kind, double x);
double activation_derivative(Activation kind, double x);

Matrix forward(const MlpParams& params, const Matrix& x);

/// Mean of squared errors over all m * N output entries.
double mse_loss(const MlpParams& params, const Matrix& x, const Matrix& y);

/// Exact backpropagated gradient of mse_loss in FlatVector layout.
FlatVector loss_gradient(const MlpParams& params, const Matrix& x, const Matrix& y);

/// Fused loss + gradient; `grad` must have param_count() entries.
double loss_and_gradient(const MlpParams& params, const Matrix& x, const Matrix& y,
                         std::span<double> grad);

FlatVector flatten(const MlpParams& params);
MlpParams unflatten(const FlatVector& v, Activation activation);
MlpParams unflatten(std::span<const double> values, const Layout& layout,
                    Activation activation);

std::string params_to_json(const MlpParams& params);
MlpParams params_from_json(std::string_view text);

}  // namespace svdnn

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "svdnn/network.hpp"

namespace svdnn {

struct SvdInitResult {
  MlpParams params;
  /// Set when the initialization is degenerate (e.g. an all-zero regression).
  std::optional<std::string> warning;
  /// Singular values of the full regression matrix, for diagnostics.
  Vector singular_values;
};

/// Network initialization from the rank-p truncated regression matrix.
///
/// Fits y ~ B x + a, decomposes B = U S V^T and keeps the p leading triplets:
///   w_hidden = prescale * V_p^T,  b_hidden = 0,
///   w_out    = U_p S_p / prescale, b_out = a.
/// With linear units the composed network is exactly the rank-p regression,
/// whatever the prescale.
SvdInitResult svd_initialize(const Matrix& x, const Matrix& y, std::size_t hidden_width,
                             double prescale = 1.0,
                             Activation activation = Activation::symmetric_sigmoid);

/// Uniform fan-in/fan-out initialization, U(-L, L) with
/// L = sqrt(6 / (fan_in + fan_out)) per layer. Biases are zero.
MlpParams random_initialize(const Layout& layout, std::uint64_t seed,
                            Activation activation = Activation::symmetric_sigmoid);

/// Half-width L of the uniform range used by random_initialize.
double uniform_init_limit(std::size_t fan_in, std::size_t fan_out);

}  // namespace svdnn

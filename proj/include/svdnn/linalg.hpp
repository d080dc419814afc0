#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

#include "svdnn/matrix.hpp"

namespace svdnn {

/// Economical singular value decomposition a = u * diag(s) * v^T.
///
/// u is m x r, v is n x r, s has r entries sorted descending. A freshly
/// decomposed matrix has r = min(m, n); truncation shrinks r.
struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix v;

  std::size_t rank() const noexcept { return s.size(); }
};

struct SvdOptions {
  /// Sweeps stop once every normalized column inner product is below this.
  double orthogonality_tol = 1e-14;
  int max_sweeps = 60;
};

/// One-sided (Hestenes) Jacobi SVD.
///
/// Rotates the min(m, n) columns of whichever of a / a^T is tall. Each
/// singular pair is sign-normalized so the largest-magnitude entry of its v
/// column is positive (lowest index wins ties), which makes the output
/// bit-stable for a given input.
///
/// Throws InvalidInput for empty or non-finite input and NumericalFailure
/// (with the remaining off-diagonal residual) if the sweep cap is reached.
SvdFactors svd_decompose(const Matrix& a, const SvdOptions& options = {});

/// u * diag(s) * v^T. An r = 0 factor set yields the m x n zero matrix.
Matrix reconstruct(const SvdFactors& f);

/// Same product accumulated as the sum of rank-one terms s_k u_k v_k^T.
Matrix reconstruct_rank_one_sum(const SvdFactors& f);

/// Keeps the k leading singular triplets (best rank-k approximation in L2).
SvdFactors truncate(const SvdFactors& f, std::size_t k);

/// eps * max(m, n), the threshold (relative to s_max) below which a singular
/// value counts as zero.
double default_rank_tol(std::size_t rows, std::size_t cols);

/// Moore-Penrose pseudo-inverse v * diag(1/s) * u^T, with singular values at
/// or below rank_tol * s_max left uninverted. A negative rank_tol selects
/// default_rank_tol.
Matrix pseudo_inverse(const Matrix& a, double rank_tol = -1.0);
Matrix pseudo_inverse(const SvdFactors& f, double rank_tol);

/// Induced L2 norm, i.e. the largest singular value.
double operator_norm_l2(const Matrix& a);

/// Number of singular values strictly above rank_tol * s_max.
std::size_t numerical_rank(const SvdFactors& f, double rank_tol);

/// (m + n + 1) r - r^2 - r with r = min(m, n); always equals m * n.
std::int64_t svd_free_param_count(std::int64_t m, std::int64_t n);

struct GapFraction {
  double exact;
  double approx;
};

/// Ratio of orthogonality constraints (r^2 + r) to the parameter count
/// (m + q m + 1) r of a rank-r linear bottleneck, and its large-r
/// approximation r / ((1 + q) m).
GapFraction orthogonality_gap_fraction(std::int64_t r, std::int64_t m, double q);

}  // namespace svdnn

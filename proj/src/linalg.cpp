#include "svdnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "svdnn/errors.hpp"

namespace svdnn {

namespace {

// Inner products of the working vectors are accumulated in extended
// precision; the 1e-14 stopping threshold is otherwise below the rounding
// noise of a double dot product once vectors get long.
struct PairProducts {
  double alpha;  // |a_p|^2
  double beta;   // |a_q|^2
  double gamma;  // a_p . a_q
};

PairProducts pair_products(std::span<const double> ap, std::span<const double> aq) {
  long double alpha = 0.0L, beta = 0.0L, gamma = 0.0L;
  for (std::size_t i = 0; i < ap.size(); ++i) {
    const long double x = ap[i];
    const long double y = aq[i];
    alpha += x * x;
    beta += y * y;
    gamma += x * y;
  }
  return {static_cast<double>(alpha), static_cast<double>(beta),
          static_cast<double>(gamma)};
}

void rotate(std::span<double> p, std::span<double> q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    const double y = q[i];
    p[i] = c * x - s * y;
    q[i] = s * x + c * y;
  }
}

// Replaces rows of `basis` flagged in `missing` with unit vectors orthogonal
// to every other row (Gram-Schmidt over the standard basis).
void complete_orthonormal_rows(Matrix& basis, const std::vector<bool>& missing) {
  const std::size_t len = basis.cols();
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < basis.rows(); ++j) {
    if (!missing[j]) continue;
    auto target = basis.row(j);
    bool placed = false;
    while (!placed) {
      if (candidate >= len)
        throw NumericalFailure("svd: cannot complete orthonormal basis");
      std::fill(target.begin(), target.end(), 0.0);
      target[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < basis.rows(); ++k) {
          if (k == j || (missing[k] && k > j)) continue;
          auto other = basis.row(k);
          const double proj = dot(target, other);
          for (std::size_t i = 0; i < len; ++i) target[i] -= proj * other[i];
        }
      }
      const double nrm = norm2(target);
      if (nrm > 0.5) {
        for (double& x : target) x /= nrm;
        placed = true;
      }
    }
  }
}

}  // namespace

SvdFactors svd_decompose(const Matrix& a, const SvdOptions& options) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidInput("svd: empty matrix");
  require_finite(a, "svd input");

  const bool tall = a.rows() >= a.cols();
  // Rows of `work` are the vectors being orthogonalized: columns of a when a
  // is tall, columns of a^T (rows of a) otherwise.
  Matrix work = tall ? a.transposed() : a;
  const std::size_t k = work.rows();
  Matrix rot = Matrix::identity(k);

  double off = 0.0;
  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    off = 0.0;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const auto [alpha, beta, gamma] = pair_products(work.row(p), work.row(q));
        if (alpha < std::numeric_limits<double>::min() ||
            beta < std::numeric_limits<double>::min())
          continue;
        const double measure = std::abs(gamma) / std::sqrt(alpha * beta);
        off = std::max(off, measure);
        if (measure < options.orthogonality_tol) continue;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate(work.row(p), work.row(q), c, s);
        rotate(rot.row(p), rot.row(q), c, s);
      }
    }
    converged = off < options.orthogonality_tol;
  }
  if (!converged) {
    throw NumericalFailure("svd: Jacobi sweeps did not converge (residual " +
                               std::to_string(off) + ")",
                           off);
  }

  Vector sigma(k);
  std::vector<bool> null_column(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    sigma[j] = norm2(work.row(j));
    if (sigma[j] < std::numeric_limits<double>::min()) {
      sigma[j] = 0.0;
      null_column[j] = true;
    } else {
      for (double& x : work.row(j)) x /= sigma[j];
    }
  }
  complete_orthonormal_rows(work, null_column);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  // work rows are the long-side singular vectors, rot rows the short-side ones.
  const Matrix& left_rows = tall ? work : rot;
  const Matrix& right_rows = tall ? rot : work;

  SvdFactors f{Matrix(a.rows(), k), Vector(k), Matrix(a.cols(), k)};
  for (std::size_t jj = 0; jj < k; ++jj) {
    const std::size_t j = order[jj];
    f.s[jj] = sigma[j];
    auto ur = left_rows.row(j);
    auto vr = right_rows.row(j);

    std::size_t lead = 0;
    for (std::size_t i = 1; i < vr.size(); ++i)
      if (std::abs(vr[i]) > std::abs(vr[lead])) lead = i;
    const double sign = vr[lead] < 0.0 ? -1.0 : 1.0;

    for (std::size_t i = 0; i < a.rows(); ++i) f.u(i, jj) = sign * ur[i];
    for (std::size_t i = 0; i < a.cols(); ++i) f.v(i, jj) = sign * vr[i];
  }
  return f;
}

namespace {

void check_factor_shapes(const SvdFactors& f) {
  if (f.u.cols() != f.s.size() || f.v.cols() != f.s.size())
    throw InvalidInput("svd factors: u/s/v rank mismatch");
}

}  // namespace

Matrix reconstruct(const SvdFactors& f) {
  check_factor_shapes(f);
  Matrix us = f.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= f.s[j];
  if (f.rank() == 0) return Matrix(f.u.rows(), f.v.rows());
  return us * f.v.transposed();
}

Matrix reconstruct_rank_one_sum(const SvdFactors& f) {
  check_factor_shapes(f);
  Matrix out(f.u.rows(), f.v.rows());
  for (std::size_t k = 0; k < f.rank(); ++k)
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const double su = f.s[k] * f.u(i, k);
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += su * f.v(j, k);
    }
  return out;
}

SvdFactors truncate(const SvdFactors& f, std::size_t k) {
  check_factor_shapes(f);
  if (k > f.rank())
    throw InvalidInput("truncate: k=" + std::to_string(k) + " exceeds rank " +
                       std::to_string(f.rank()));
  SvdFactors t{Matrix(f.u.rows(), k), Vector(f.s.begin(), f.s.begin() + k),
               Matrix(f.v.rows(), k)};
  for (std::size_t i = 0; i < f.u.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) t.u(i, j) = f.u(i, j);
  for (std::size_t i = 0; i < f.v.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) t.v(i, j) = f.v(i, j);
  return t;
}

double default_rank_tol(std::size_t rows, std::size_t cols) {
  return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols));
}

Matrix pseudo_inverse(const SvdFactors& f, double rank_tol) {
  check_factor_shapes(f);
  const double s_max = f.rank() ? f.s.front() : 0.0;
  const double cutoff = rank_tol * s_max;
  Matrix out(f.v.rows(), f.u.rows());
  for (std::size_t k = 0; k < f.rank(); ++k) {
    if (!(f.s[k] > cutoff) || f.s[k] == 0.0) continue;
    const double inv = 1.0 / f.s[k];
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const double vi = f.v(i, k) * inv;
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += vi * f.u(j, k);
    }
  }
  return out;
}

Matrix pseudo_inverse(const Matrix& a, double rank_tol) {
  if (rank_tol < 0.0) rank_tol = default_rank_tol(a.rows(), a.cols());
  return pseudo_inverse(svd_decompose(a), rank_tol);
}

double operator_norm_l2(const Matrix& a) { return svd_decompose(a).s.front(); }

std::size_t numerical_rank(const SvdFactors& f, double rank_tol) {
  if (rank_tol < 0.0) throw InvalidInput("numerical_rank: rank_tol must be >= 0");
  if (f.rank() == 0 || f.s.front() == 0.0) return 0;
  const double cutoff = rank_tol * f.s.front();
  return static_cast<std::size_t>(
      std::count_if(f.s.begin(), f.s.end(), [&](double s) { return s > cutoff; }));
}

std::int64_t svd_free_param_count(std::int64_t m, std::int64_t n) {
  if (m < 1 || n < 1) throw InvalidInput("svd_free_param_count: m, n must be >= 1");
  const std::int64_t r = std::min(m, n);
  return (m + n + 1) * r - r * r - r;
}

GapFraction orthogonality_gap_fraction(std::int64_t r, std::int64_t m, double q) {
  if (r < 1 || m < 1 || !(q >= 1.0))
    throw InvalidInput("orthogonality_gap_fraction: need r >= 1, m >= 1, q >= 1");
  const double rd = static_cast<double>(r);
  const double md = static_cast<double>(m);
  return {(rd * rd + rd) / ((md + q * md + 1.0) * rd), rd / ((1.0 + q) * md)};
}

}  // namespace svdnn

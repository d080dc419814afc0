#include "svdnn/initsvd.hpp"

#include <cmath>

#include "svdnn/errors.hpp"
#include "svdnn/linalg.hpp"
#include "svdnn/regress.hpp"
#include "svdnn/rng.hpp"

namespace svdnn {

SvdInitResult svd_initialize(const Matrix& x, const Matrix& y, std::size_t p,
                             double prescale, Activation activation) {
  const std::size_t n = x.rows();
  const std::size_t m = y.rows();
  if (p < 1 || p > std::min(m, n))
    throw InvalidInput("svd_initialize: hidden width " + std::to_string(p) +
                       " must be in [1, min(m, n) = " + std::to_string(std::min(m, n)) + "]");
  if (x.cols() < 1) throw InvalidInput("svd_initialize: no training examples");
  if (!(prescale > 0.0) || !std::isfinite(prescale))
    throw InvalidInput("svd_initialize: prescale must be positive");

  const AffineMap fit = fit_least_squares(x, y, /*with_bias=*/true);
  const SvdFactors full = svd_decompose(fit.weights);
  const SvdFactors kept = truncate(full, p);

  SvdInitResult result{MlpParams::zeros({n, p, m}, activation), std::nullopt, full.s};
  MlpParams& params = result.params;
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t j = 0; j < n; ++j) params.w_hidden(k, j) = prescale * kept.v(j, k);
    for (std::size_t i = 0; i < m; ++i) params.w_out(i, k) = kept.u(i, k) * kept.s[k] / prescale;
  }
  params.b_out = fit.bias;

  if (full.s.front() == 0.0) result.warning = "regression matrix is zero; output weights are zero";
  return result;
}

double uniform_init_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

MlpParams random_initialize(const Layout& l, std::uint64_t seed, Activation activation) {
  if (l.n < 1 || l.p < 1 || l.m < 1) throw InvalidInput("random_initialize: dims must be >= 1");
  MlpParams params = MlpParams::zeros(l, activation);
  Rng rng(seed);
  const double hidden_limit = uniform_init_limit(l.n, l.p);
  for (double& w : params.w_hidden.data()) w = rng.uniform(-hidden_limit, hidden_limit);
  const double out_limit = uniform_init_limit(l.p, l.m);
  for (double& w : params.w_out.data()) w = rng.uniform(-out_limit, out_limit);
  return params;
}

}  // namespace svdnn

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "svdnn/matrix.hpp"

namespace svdnn {

enum class Algorithm { sgd, rmsprop, adadelta, cg };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Objective over a flat parameter vector. `value_and_gradient` writes the
/// gradient into its second argument and returns the loss; each invocation
/// counts as one gradient call.
struct Objective {
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::span<double>)> value_and_gradient;
};

struct OptimizerSpec {
  Algorithm algorithm = Algorithm::sgd;
  double learning_rate = 0.01;
  double rho = 0.0;
  double epsilon = 1e-7;
  int max_iterations = 2000;
  double grad_tol = 1e-5;  // cg: stop once |g|_inf < grad_tol
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.1;
  int max_line_search_trials = 20;
  /// 0 disables the limit; otherwise the run stops with `timeout`.
  double wall_clock_budget_s = 0.0;

  /// Throws InvalidInput naming the first offending field.
  void validate() const;
  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

/// Framework-style defaults: sgd lr 0.01; rmsprop lr 1e-3, rho 0.9;
/// adadelta lr 1.0, rho 0.95; eps 1e-7; cg grad_tol 1e-5, c1 1e-4, c2 0.1.
OptimizerSpec default_spec(Algorithm algorithm, int max_iterations = 2000);

enum class Termination { budget, grad_tol, line_search_failure, timeout };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view name);

struct RunTrace {
  Vector final_params;
  double final_loss = 0.0;
  int iterations_used = 0;
  long gradient_calls = 0;
  /// Loss before the first update followed by the loss after each iteration.
  Vector loss_history;
  Termination terminated_by = Termination::budget;
};

/// Runs the selected optimizer from x0. Bit-deterministic for fixed inputs.
/// NaN/Inf in a loss or gradient raises NumericalFailure carrying the
/// iteration index.
RunTrace optimize(const OptimizerSpec& spec, const Objective& objective,
                  std::span<const double> x0);

/// w -= lr * g
void sgd_step(std::span<double> w, std::span<const double> g, double lr);

struct RmspropState {
  Vector mean_square;
};

/// v = rho v + (1 - rho) g^2;  w -= lr g / sqrt(v + eps)
void rmsprop_step(RmspropState& state, std::span<double> w, std::span<const double> g,
                  double lr, double rho, double eps);

struct AdadeltaState {
  Vector mean_square_grad;
  Vector mean_square_update;
};

/// v = rho v + (1 - rho) g^2;  d = -sqrt(u + eps) / sqrt(v + eps) g;
/// u = rho u + (1 - rho) d^2;  w += lr d
void adadelta_step(AdadeltaState& state, std::span<double> w, std::span<const double> g,
                   double lr, double rho, double eps);

/// Polak-Ribiere+ nonlinear conjugate gradient with a strong-Wolfe line
/// search. Restarts along -g when the direction is not a descent direction
/// and every dim(x) iterations. Each line-search trial costs one gradient
/// call.
RunTrace cg_run(const Objective& objective, std::span<const double> x0,
                const OptimizerSpec& spec);

}  // namespace svdnn

#include "svdnn/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "svdnn/errors.hpp"

namespace svdnn {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::rmsprop: return "rmsprop";
    case Algorithm::adadelta: return "adadelta";
    case Algorithm::cg: return "cg";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "sgd") return Algorithm::sgd;
  if (name == "rmsprop") return Algorithm::rmsprop;
  if (name == "adadelta") return Algorithm::adadelta;
  if (name == "cg") return Algorithm::cg;
  throw InvalidInput("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::budget: return "budget";
    case Termination::grad_tol: return "grad_tol";
    case Termination::line_search_failure: return "line_search_failure";
    case Termination::timeout: return "timeout";
  }
  return "?";
}

Termination parse_termination(std::string_view name) {
  if (name == "budget") return Termination::budget;
  if (name == "grad_tol") return Termination::grad_tol;
  if (name == "line_search_failure") return Termination::line_search_failure;
  if (name == "timeout") return Termination::timeout;
  throw InvalidInput("unknown termination '" + std::string(name) + "'");
}

void OptimizerSpec::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    throw InvalidInput(std::string("optimizer spec: ") + field + " " + why);
  };
  if (!(learning_rate > 0.0)) bad("learning_rate", "must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) bad("rho", "must be in [0, 1)");
  if (!(epsilon > 0.0)) bad("epsilon", "must be > 0");
  if (max_iterations < 1) bad("max_iterations", "must be >= 1");
  if (!(grad_tol >= 0.0)) bad("grad_tol", "must be >= 0");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    bad("wolfe_c1/wolfe_c2", "must satisfy 0 < c1 < c2 < 1");
  if (max_line_search_trials < 1) bad("max_line_search_trials", "must be >= 1");
  if (!(wall_clock_budget_s >= 0.0)) bad("wall_clock_budget_s", "must be >= 0");
}

OptimizerSpec default_spec(Algorithm algorithm, int max_iterations) {
  OptimizerSpec s;
  s.algorithm = algorithm;
  s.max_iterations = max_iterations;
  switch (algorithm) {
    case Algorithm::sgd:
      s.learning_rate = 0.01;
      break;
    case Algorithm::rmsprop:
      s.learning_rate = 0.001;
      s.rho = 0.9;
      break;
    case Algorithm::adadelta:
      s.learning_rate = 1.0;
      s.rho = 0.95;
      break;
    case Algorithm::cg:
      s.learning_rate = 1.0;  // unused
      break;
  }
  return s;
}

void sgd_step(std::span<double> w, std::span<const double> g, double lr) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
}

void rmsprop_step(RmspropState& state, std::span<double> w, std::span<const double> g,
                  double lr, double rho, double eps) {
  if (state.mean_square.size() != w.size()) state.mean_square.assign(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double& v = state.mean_square[i];
    v = rho * v + (1.0 - rho) * g[i] * g[i];
    w[i] -= lr * g[i] / std::sqrt(v + eps);
  }
}

void adadelta_step(AdadeltaState& state, std::span<double> w, std::span<const double> g,
                   double lr, double rho, double eps) {
  if (state.mean_square_grad.size() != w.size()) {
    state.mean_square_grad.assign(w.size(), 0.0);
    state.mean_square_update.assign(w.size(), 0.0);
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    double& v = state.mean_square_grad[i];
    double& u = state.mean_square_update[i];
    v = rho * v + (1.0 - rho) * g[i] * g[i];
    const double delta = -std::sqrt(u + eps) / std::sqrt(v + eps) * g[i];
    u = rho * u + (1.0 - rho) * delta * delta;
    w[i] += lr * delta;
  }
}

namespace {

using Clock = std::chrono::steady_clock;

class Deadline {
 public:
  explicit Deadline(double budget_s)
      : enabled_(budget_s > 0.0),
        end_(Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double>(enabled_ ? budget_s : 0.0))) {}
  bool expired() const { return enabled_ && Clock::now() >= end_; }

 private:
  bool enabled_;
  Clock::time_point end_;
};

void require_finite_eval(double f, std::span<const double> g, int iteration) {
  bool ok = std::isfinite(f);
  for (double v : g) ok = ok && std::isfinite(v);
  if (!ok)
    throw NumericalFailure("non-finite loss or gradient at iteration " +
                               std::to_string(iteration),
                           0.0, iteration);
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

RunTrace first_order_run(const OptimizerSpec& spec, const Objective& objective,
                         std::span<const double> x0) {
  RunTrace trace;
  trace.final_params.assign(x0.begin(), x0.end());
  std::span<double> w = trace.final_params;
  Vector g(w.size());
  RmspropState rms;
  AdadeltaState ada;
  const Deadline deadline(spec.wall_clock_budget_s);

  for (int it = 0; it < spec.max_iterations; ++it) {
    if (deadline.expired()) {
      trace.terminated_by = Termination::timeout;
      break;
    }
    const double f = objective.value_and_gradient(w, g);
    ++trace.gradient_calls;
    require_finite_eval(f, g, it);
    trace.loss_history.push_back(f);

    switch (spec.algorithm) {
      case Algorithm::sgd: sgd_step(w, g, spec.learning_rate); break;
      case Algorithm::rmsprop:
        rmsprop_step(rms, w, g, spec.learning_rate, spec.rho, spec.epsilon);
        break;
      case Algorithm::adadelta:
        adadelta_step(ada, w, g, spec.learning_rate, spec.rho, spec.epsilon);
        break;
      case Algorithm::cg: break;
    }
    ++trace.iterations_used;
  }

  trace.final_loss = objective.value(w);
  require_finite_eval(trace.final_loss, {}, trace.iterations_used);
  trace.loss_history.push_back(trace.final_loss);
  return trace;
}

struct Point {
  Vector x;
  double f = 0.0;
  Vector g;
};

struct LineSearchResult {
  std::optional<Point> accepted;
  std::optional<Point> best;  // lowest-loss trial, used when the search fails
};

// Strong-Wolfe bracketing/zoom search along d from `start`.
class WolfeSearch {
 public:
  WolfeSearch(const Objective& obj, const OptimizerSpec& spec, long& calls, int iteration)
      : obj_(obj), spec_(spec), calls_(calls), iteration_(iteration) {}

  LineSearchResult run(const Point& start, std::span<const double> d, double alpha0) {
    start_ = &start;
    dir_ = d;
    phi0_ = start.f;
    dphi0_ = dot(start.g, d);
    trials_ = 0;
    result_ = {};

    double a_prev = 0.0, f_prev = phi0_, d_prev = dphi0_;
    double alpha = alpha0;
    for (int i = 0; trials_ < spec_.max_line_search_trials; ++i) {
      const auto [f_a, d_a] = evaluate(alpha);
      if (f_a > phi0_ + spec_.wolfe_c1 * alpha * dphi0_ || (i > 0 && f_a >= f_prev)) {
        zoom(a_prev, f_prev, d_prev, alpha, f_a, d_a);
        return std::move(result_);
      }
      if (std::abs(d_a) <= -spec_.wolfe_c2 * dphi0_) {
        result_.accepted = last_;
        if (i == 0) refine_on_quadratic(alpha, f_a, d_a);
        return std::move(result_);
      }
      if (d_a >= 0.0) {
        zoom(alpha, f_a, d_a, a_prev, f_prev, d_prev);
        return std::move(result_);
      }
      const double next = extrapolate(a_prev, d_prev, alpha, d_a);
      a_prev = alpha;
      f_prev = f_a;
      d_prev = d_a;
      alpha = next;
    }
    return std::move(result_);
  }

 private:
  struct Sample {
    double f;
    double dphi;
  };

  Sample evaluate(double alpha) {
    Point p;
    p.x = start_->x;
    for (std::size_t i = 0; i < p.x.size(); ++i) p.x[i] += alpha * dir_[i];
    p.g.resize(p.x.size());
    p.f = obj_.value_and_gradient(p.x, p.g);
    ++calls_;
    ++trials_;
    require_finite_eval(p.f, p.g, iteration_);
    const double dphi = dot(p.g, dir_);
    if (!result_.best || p.f < result_.best->f) result_.best = p;
    last_ = std::move(p);
    return {last_.f, dphi};
  }

  // An accepted first trial on a line that is quadratic to rounding (the
  // trapezoid rule is exact) gets one more call at the exact minimizer.
  // Keeps CG conjugate on quadratic objectives; never fires on curved lines.
  void refine_on_quadratic(double alpha, double f_a, double d_a) {
    if (trials_ >= spec_.max_line_search_trials || f_a == phi0_) return;
    const double mismatch = std::abs(f_a - phi0_ - 0.5 * alpha * (dphi0_ + d_a)) / std::abs(f_a - phi0_);
    if (!(mismatch < 1e-8) || !(d_a > dphi0_)) return;
    const double exact = alpha * dphi0_ / (dphi0_ - d_a);
    if (!(std::abs(exact - alpha) > 0.01 * alpha)) return;
    Point keep = last_;
    const auto [f_e, d_e] = evaluate(exact);
    if (f_e <= f_a && f_e <= phi0_ + spec_.wolfe_c1 * exact * dphi0_ && std::abs(d_e) <= std::abs(d_a)) {
      result_.accepted = last_;
    } else {
      result_.accepted = std::move(keep);
    }
  }

  // Secant on the directional derivative, kept within [1.25, 10] x alpha.
  static double extrapolate(double a_prev, double d_prev, double alpha, double d_a) {
    double a = 10.0 * alpha;
    if (d_a > d_prev) a = alpha - d_a * (alpha - a_prev) / (d_a - d_prev);
    return std::clamp(a, 1.25 * alpha, 10.0 * alpha);
  }

  static double interpolate(double a_lo, double f_lo, double d_lo, double a_hi, double f_hi,
                            double d_hi) {
    const double lo = std::min(a_lo, a_hi);
    const double hi = std::max(a_lo, a_hi);
    const double margin = 0.1 * (hi - lo);
    auto inside = [&](double a) { return std::isfinite(a) && a > lo + margin && a < hi - margin; };

    const double d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi);
    const double disc = d1 * d1 - d_lo * d_hi;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), a_hi - a_lo);
      const double a = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / (d_hi - d_lo + 2.0 * d2);
      if (inside(a)) return a;
    }
    const double span = a_hi - a_lo;
    const double denom = 2.0 * (f_hi - f_lo - d_lo * span);
    if (denom != 0.0) {
      const double a = a_lo - d_lo * span * span / denom;
      if (inside(a)) return a;
    }
    return 0.5 * (a_lo + a_hi);
  }

  void zoom(double a_lo, double f_lo, double d_lo, double a_hi, double f_hi, double d_hi) {
    while (trials_ < spec_.max_line_search_trials) {
      if (std::abs(a_hi - a_lo) <= 1e-16 * std::max(1.0, std::abs(a_lo))) return;
      const double a = interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
      const auto [f_a, d_a] = evaluate(a);
      if (f_a > phi0_ + spec_.wolfe_c1 * a * dphi0_ || f_a >= f_lo) {
        a_hi = a;
        f_hi = f_a;
        d_hi = d_a;
      } else {
        if (std::abs(d_a) <= -spec_.wolfe_c2 * dphi0_) {
          result_.accepted = last_;
          return;
        }
        if (d_a * (a_hi - a_lo) >= 0.0) {
          a_hi = a_lo;
          f_hi = f_lo;
          d_hi = d_lo;
        }
        a_lo = a;
        f_lo = f_a;
        d_lo = d_a;
      }
    }
  }

  const Objective& obj_;
  const OptimizerSpec& spec_;
  long& calls_;
  int iteration_;

  const Point* start_ = nullptr;
  std::span<const double> dir_;
  double phi0_ = 0.0;
  double dphi0_ = 0.0;
  int trials_ = 0;
  Point last_;
  LineSearchResult result_;
};

double initial_step(double f, double f_prev, double slope) {
  const double a = 1.01 * 2.0 * (f - f_prev) / slope;
  return (std::isfinite(a) && a > 0.0) ? a : 1.0;
}

}  // namespace

RunTrace cg_run(const Objective& objective, std::span<const double> x0,
                const OptimizerSpec& spec) {
  spec.validate();
  RunTrace trace;
  const Deadline deadline(spec.wall_clock_budget_s);
  const std::size_t dim = x0.size();

  Point cur{Vector(x0.begin(), x0.end()), 0.0, Vector(dim)};
  cur.f = objective.value_and_gradient(cur.x, cur.g);
  ++trace.gradient_calls;
  require_finite_eval(cur.f, cur.g, 0);
  trace.loss_history.push_back(cur.f);

  Vector d(dim);
  for (std::size_t i = 0; i < dim; ++i) d[i] = -cur.g[i];
  double f_prev = cur.f + 0.5 * norm2(cur.g);
  std::size_t since_restart = 0;
  trace.terminated_by = Termination::budget;

  if (inf_norm(cur.g) < spec.grad_tol) {
    trace.terminated_by = Termination::grad_tol;
  } else {
    for (int it = 0; it < spec.max_iterations; ++it) {
      if (deadline.expired()) {
        trace.terminated_by = Termination::timeout;
        break;
      }
      double slope = dot(cur.g, d);
      if (!(slope < 0.0)) {
        for (std::size_t i = 0; i < dim; ++i) d[i] = -cur.g[i];
        slope = dot(cur.g, d);
        since_restart = 0;
      }

      WolfeSearch search(objective, spec, trace.gradient_calls, it);
      LineSearchResult ls = search.run(cur, d, initial_step(cur.f, f_prev, slope));
      if (!ls.accepted && since_restart != 0) {
        // Retry once along steepest descent before giving up.
        for (std::size_t i = 0; i < dim; ++i) d[i] = -cur.g[i];
        since_restart = 0;
        slope = dot(cur.g, d);
        LineSearchResult retry = search.run(cur, d, initial_step(cur.f, f_prev, slope));
        if (retry.best && (!ls.best || retry.best->f < ls.best->f)) ls.best = std::move(retry.best);
        ls.accepted = std::move(retry.accepted);
      }
      if (!ls.accepted) {
        if (ls.best && ls.best->f < cur.f) {
          cur = std::move(*ls.best);
          trace.loss_history.push_back(cur.f);
          ++trace.iterations_used;
        }
        trace.terminated_by = Termination::line_search_failure;
        break;
      }

      Point next = std::move(*ls.accepted);
      double beta = 0.0;
      const double gg = dot(cur.g, cur.g);
      if (gg > 0.0) {
        double num = 0.0;
        for (std::size_t i = 0; i < dim; ++i) num += next.g[i] * (next.g[i] - cur.g[i]);
        beta = std::max(0.0, num / gg);
      }
      if (++since_restart >= dim) {
        beta = 0.0;
        since_restart = 0;
      }
      for (std::size_t i = 0; i < dim; ++i) d[i] = -next.g[i] + beta * d[i];

      f_prev = cur.f;
      cur = std::move(next);
      trace.loss_history.push_back(cur.f);
      ++trace.iterations_used;
      if (inf_norm(cur.g) < spec.grad_tol) {
        trace.terminated_by = Termination::grad_tol;
        break;
      }
    }
  }

  trace.final_loss = cur.f;
  trace.final_params = std::move(cur.x);
  return trace;
}

RunTrace optimize(const OptimizerSpec& spec, const Objective& objective,
                  std::span<const double> x0) {
  spec.validate();
  for (double v : x0)
    if (!std::isfinite(v)) throw InvalidInput("optimize: starting point is not finite");
  if (spec.algorithm == Algorithm::cg) return cg_run(objective, x0, spec);
  return first_order_run(spec, objective, x0);
}

}  // namespace svdnn

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "svdnn/errors.hpp"
#include "svdnn/optimize.hpp"

using namespace svdnn;

namespace {

// f(x) = 1/2 x^T A x - b^T x
struct Quadratic {
  Matrix a;
  Vector b;

  Objective objective() const {
    Objective obj;
    obj.value = [this](std::span<const double> x) {
      const Vector ax = a * x;
      return 0.5 * dot(x, ax) - dot(b, x);
    };
    obj.value_and_gradient = [this](std::span<const double> x, std::span<double> g) {
      const Vector ax = a * x;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = ax[i] - b[i];
      return 0.5 * dot(x, ax) - dot(b, x);
    };
    return obj;
  }
};

Quadratic random_spd(std::size_t d, std::uint64_t seed) {
  const Matrix m = oracle::random_matrix(d, d, seed);
  Matrix a = m.transposed() * m;
  for (std::size_t i = 0; i < d; ++i) a(i, i) += 0.5;
  Rng rng(seed + 1);
  return {a, oracle::random_vector(d, rng)};
}

Objective rosenbrock() {
  auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  Objective obj;
  obj.value = f;
  obj.value_and_gradient = [f](std::span<const double> x, std::span<double> g) {
    g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
    g[1] = 200.0 * (x[1] - x[0] * x[0]);
    return f(x);
  };
  return obj;
}

Objective counted(const Objective& inner, long& calls) {
  Objective obj;
  obj.value = inner.value;
  obj.value_and_gradient = [inner, &calls](std::span<const double> x, std::span<double> g) {
    ++calls;
    return inner.value_and_gradient(x, g);
  };
  return obj;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("iteration budget contract") {
    const Quadratic q = random_spd(3, 1);
    OptimizerSpec spec = default_spec(Algorithm::sgd, 0);
    CHECK_THROWS_AS(optimize(spec, q.objective(), Vector(3, 1.0)), InvalidInput);

    spec.max_iterations = 1;
    const RunTrace t = optimize(spec, q.objective(), Vector(3, 1.0));
    CHECK(t.iterations_used == 1);
    CHECK(t.gradient_calls == 1);
    CHECK(t.loss_history.size() == 2);
    Vector expected(3, 1.0);
    Vector g(3);
    q.objective().value_and_gradient(expected, g);
    sgd_step(expected, g, spec.learning_rate);
    CHECK(t.final_params == expected);
  }

  TEST_CASE("spec validation names the field") {
    OptimizerSpec s = default_spec(Algorithm::rmsprop);
    s.rho = 1.0;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("rho"), InvalidInput);
    s = default_spec(Algorithm::cg);
    s.wolfe_c1 = 0.5;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("wolfe"), InvalidInput);
    s = default_spec(Algorithm::sgd);
    s.learning_rate = 0.0;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("learning_rate"), InvalidInput);
  }

  TEST_CASE("stationary start") {
    const Quadratic q{Matrix::identity(2), Vector{0.0, 0.0}};
    for (Algorithm a : {Algorithm::sgd, Algorithm::rmsprop, Algorithm::adadelta}) {
      const RunTrace t = optimize(default_spec(a, 10), q.objective(), Vector{0.0, 0.0});
      CHECK(t.final_params == Vector{0.0, 0.0});
    }
    const RunTrace cg = optimize(default_spec(Algorithm::cg), q.objective(), Vector{0.0, 0.0});
    CHECK(cg.iterations_used == 0);
    CHECK(cg.terminated_by == Termination::grad_tol);
    CHECK(cg.loss_history.size() == 1);
  }

  TEST_CASE("cg beats sgd on a quadratic at equal gradient-call budget") {
    const Quadratic q = random_spd(6, 2);
    OptimizerSpec cg_spec = default_spec(Algorithm::cg, 8);
    cg_spec.grad_tol = 0.0;
    const RunTrace cg = optimize(cg_spec, q.objective(), Vector(6, 0.0));
    const RunTrace sgd = optimize(default_spec(Algorithm::sgd, static_cast<int>(cg.gradient_calls)),
                                  q.objective(), Vector(6, 0.0));
    CHECK(sgd.gradient_calls == cg.gradient_calls);
    CHECK(cg.final_loss <= sgd.final_loss);
  }

  TEST_CASE("sgd step") {
    Vector w{1.0};
    sgd_step(w, Vector{2.0}, 0.01);
    CHECK(w[0] == doctest::Approx(0.98).epsilon(1e-15));
    sgd_step(w, Vector{0.0}, 0.01);
    CHECK(w[0] == doctest::Approx(0.98).epsilon(1e-15));

    const Quadratic sq{Matrix{{2.0}}, Vector{0.0}};  // f = w^2
    const RunTrace t = optimize(default_spec(Algorithm::sgd, 2000), sq.objective(), Vector{1.0});
    CHECK(t.final_params[0] == doctest::Approx(std::pow(0.98, 2000)).epsilon(1e-9));
    CHECK(t.final_loss < 1e-30);
    for (std::size_t i = 1; i < t.loss_history.size(); ++i)
      CHECK(t.loss_history[i] <= t.loss_history[i - 1]);
  }

  TEST_CASE("rmsprop step") {
    RmspropState st;
    Vector w{0.0};
    rmsprop_step(st, w, Vector{1.0}, 1e-3, 0.9, 1e-7);
    CHECK(-w[0] == doctest::Approx(1e-3 / std::sqrt(0.1 + 1e-7)).epsilon(1e-12));
    CHECK(-w[0] == doctest::Approx(3.1623e-3).epsilon(1e-4));

    RmspropState zero;
    Vector z{0.5, -0.5};
    for (int i = 0; i < 100; ++i) rmsprop_step(zero, z, Vector{0.0, 0.0}, 1e-3, 0.9, 1e-7);
    CHECK(z == Vector{0.5, -0.5});

    RmspropState cst;
    Vector c{0.0};
    double step = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double before = c[0];
      rmsprop_step(cst, c, Vector{1.0}, 1e-3, 0.9, 1e-7);
      step = before - c[0];
    }
    CHECK(cst.mean_square[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(step == doctest::Approx(1e-3).epsilon(1e-6));
  }

  TEST_CASE("adadelta step") {
    AdadeltaState st;
    Vector w{0.0};
    adadelta_step(st, w, Vector{1.0}, 1.0, 0.95, 1e-7);
    CHECK(w[0] == doctest::Approx(-std::sqrt(1e-7) / std::sqrt(0.05 + 1e-7)).epsilon(1e-12));
    CHECK(w[0] == doctest::Approx(-1.4142e-3).epsilon(1e-4));

    AdadeltaState zero;
    Vector z{0.25};
    for (int i = 0; i < 100; ++i) adadelta_step(zero, z, Vector{0.0}, 1.0, 0.95, 1e-7);
    CHECK(z == Vector{0.25});

    AdadeltaState s1, s1000;
    Vector w1{0.0}, w1000{0.0};
    adadelta_step(s1, w1, Vector{1.0}, 1.0, 0.95, 1e-7);
    adadelta_step(s1000, w1000, Vector{1000.0}, 1.0, 0.95, 1e-7);
    CHECK(std::abs(w1000[0] / w1[0] - 1.0) < 1e-3);
  }

  TEST_CASE("adaptive steps stay finite for extreme gradients") {
    for (double g : {1e150, 1e300, -1e300, 1e-300}) {
      RmspropState r;
      AdadeltaState a;
      Vector w1{1.0}, w2{1.0};
      for (int i = 0; i < 5; ++i) {
        rmsprop_step(r, w1, Vector{g}, 1e-3, 0.9, 1e-7);
        adadelta_step(a, w2, Vector{g}, 1.0, 0.95, 1e-7);
      }
      CHECK(std::isfinite(w1[0]));
      CHECK(std::isfinite(w2[0]));
    }
  }

  TEST_CASE("cg converges on 5-d SPD quadratics") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Quadratic q = random_spd(5, 500 + seed);
      OptimizerSpec spec = default_spec(Algorithm::cg, 15);
      spec.grad_tol = 1e-7;
      const RunTrace t = optimize(spec, q.objective(), Vector(5, 1.0));
      Vector g(5);
      q.objective().value_and_gradient(t.final_params, g);
      CAPTURE(seed);
      CHECK(norm2(g) < 1e-5);
      CHECK(t.iterations_used <= 15);
      for (std::size_t i = 1; i < t.loss_history.size(); ++i)
        CHECK(t.loss_history[i] <= t.loss_history[i - 1]);
    }
  }

  TEST_CASE("cg on Rosenbrock from (-1.2, 1)") {
    OptimizerSpec spec = default_spec(Algorithm::cg, 2000);
    spec.grad_tol = 1e-9;
    const RunTrace t = optimize(spec, rosenbrock(), Vector{-1.2, 1.0});
    MESSAGE("rosenbrock: iterations=" << t.iterations_used << " calls=" << t.gradient_calls
                                      << " loss=" << t.final_loss);
    CHECK(t.final_loss < 1e-8);
    for (std::size_t i = 1; i < t.loss_history.size(); ++i)
      CHECK(t.loss_history[i] <= t.loss_history[i - 1]);
  }

  TEST_CASE("gradient-call accounting matches a counting wrapper") {
    const Quadratic q = random_spd(4, 7);
    for (Algorithm a : {Algorithm::sgd, Algorithm::rmsprop, Algorithm::adadelta, Algorithm::cg}) {
      long calls = 0;
      OptimizerSpec spec = default_spec(a, 25);
      spec.grad_tol = 0.0;
      const RunTrace t = optimize(spec, counted(q.objective(), calls), Vector(4, 1.0));
      CHECK(t.gradient_calls == calls);
      CHECK(t.gradient_calls >= t.iterations_used);
      CHECK(t.loss_history.size() == static_cast<std::size_t>(t.iterations_used) + 1);
    }
    long calls = 0;
    (void)optimize(default_spec(Algorithm::cg, 200), counted(rosenbrock(), calls), Vector{-1.2, 1.0});
    CHECK(calls > 0);
  }

  TEST_CASE("runs are bit-deterministic") {
    const Quadratic q = random_spd(5, 8);
    for (Algorithm a : {Algorithm::sgd, Algorithm::rmsprop, Algorithm::adadelta, Algorithm::cg}) {
      const RunTrace t1 = optimize(default_spec(a, 50), q.objective(), Vector(5, 0.3));
      const RunTrace t2 = optimize(default_spec(a, 50), q.objective(), Vector(5, 0.3));
      CHECK(t1.final_params == t2.final_params);
      CHECK(t1.loss_history == t2.loss_history);
      CHECK(t1.gradient_calls == t2.gradient_calls);
    }
  }

  TEST_CASE("sgd below 2/L is monotone on a quadratic") {
    const Quadratic q = random_spd(5, 9);
    const double lmax = oracle::operator_norm(q.a);
    OptimizerSpec spec = default_spec(Algorithm::sgd, 300);
    spec.learning_rate = 1.9 / lmax;
    const RunTrace t = optimize(spec, q.objective(), Vector(5, 2.0));
    // once converged the loss only moves in its last bits
    for (std::size_t i = 1; i < t.loss_history.size(); ++i)
      CHECK(t.loss_history[i] <= t.loss_history[i - 1] + 1e-14 * std::abs(t.loss_history[i - 1]));
  }

  TEST_CASE("non-finite values raise a numerical failure with the iteration") {
    Objective bad;
    int n = 0;
    bad.value = [](std::span<const double>) { return 0.0; };
    bad.value_and_gradient = [&n](std::span<const double>, std::span<double> g) {
      g[0] = ++n >= 4 ? std::nan("") : 1.0;
      return 1.0;
    };
    try {
      (void)optimize(default_spec(Algorithm::sgd, 10), bad, Vector{0.0});
      FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
      CHECK(e.iteration() == 3);
    }
    CHECK_THROWS_AS(optimize(default_spec(Algorithm::sgd), bad, Vector{INFINITY}), InvalidInput);
  }

  TEST_CASE("a failing line search returns the best point instead of throwing") {
    // Gradient with the wrong sign: every "descent" step goes uphill.
    Objective liar;
    liar.value = [](std::span<const double> x) { return x[0] * x[0]; };
    liar.value_and_gradient = [](std::span<const double> x, std::span<double> g) {
      g[0] = -2.0 * x[0];
      return x[0] * x[0];
    };
    const RunTrace t = optimize(default_spec(Algorithm::cg), liar, Vector{1.0});
    CHECK(t.terminated_by == Termination::line_search_failure);
    CHECK(t.final_loss <= 1.0);
    CHECK(t.gradient_calls > 1);
  }
}

#include "doctest.h"
#include "oracles.hpp"
#include "svdnn/errors.hpp"
#include "svdnn/linalg.hpp"
#include "svdnn/regress.hpp"

using namespace svdnn;

TEST_SUITE("regress") {
  TEST_CASE("single example gives the minimum-norm exact fit") {
    const AffineMap fit = fit_least_squares(Matrix{{1}, {0}}, Matrix{{2}}, false);
    CHECK(oracle::max_abs_diff(fit.weights, Matrix{{2, 0}}) < 1e-15);
    CHECK(fit.bias == Vector{0.0});
    CHECK(fit.rank_used == 1);
  }

  TEST_CASE("noise-free over-determined data recovers the generating map") {
    const Matrix b0 = oracle::random_matrix(3, 4, 1);
    const Matrix x = oracle::random_matrix(4, 20, 2);
    const AffineMap fit = fit_least_squares(x, b0 * x, false);
    CHECK(oracle::max_abs_diff(fit.weights, b0) < 1e-9);
    CHECK(fit.rank_used == 4);
  }

  TEST_CASE("over-determined fit equals the normal-equation solution") {
    const Matrix x = oracle::random_matrix(4, 30, 3);
    const Matrix y = oracle::random_matrix(2, 30, 4);
    const AffineMap fit = fit_least_squares(x, y, false);
    // B = Y X^T (X X^T)^{-1}  <=>  (X X^T) B^T = X Y^T
    const Matrix bt = oracle::gauss_solve(x * x.transposed(), x * y.transposed());
    CHECK(oracle::max_abs_diff(fit.weights, bt.transposed()) < 1e-8);

    const Matrix residual = y - predict(fit, x);
    CHECK(max_abs(residual * x.transposed()) < 1e-8 * frobenius_norm(y));
  }

  TEST_CASE("under-determined closed form matches where X^T X is invertible") {
    const Matrix x = oracle::random_matrix(9, 4, 5);
    const Matrix y = oracle::random_matrix(3, 4, 6);
    const AffineMap fit = fit_least_squares(x, y, false);
    // B = Y (X^T X)^{-1} X^T
    const Matrix ref = y * oracle::gauss_solve(x.transposed() * x, x.transposed());
    CHECK(oracle::max_abs_diff(fit.weights, ref) < 1e-9);
    CHECK(oracle::rel_fro_diff(predict(fit, x), y) < 1e-8);
  }

  TEST_CASE("under-determined solution has minimum Frobenius norm") {
    const Matrix x = oracle::random_matrix(8, 5, 7);
    const Matrix y = oracle::random_matrix(3, 5, 8);
    const AffineMap fit = fit_least_squares(x, y, false);
    const Matrix null_proj = Matrix::identity(8) - x * pseudo_inverse(x);
    const double base = frobenius_norm(fit.weights);
    for (int t = 0; t < 20; ++t) {
      const Matrix delta = oracle::random_matrix(3, 8, 100 + t) * null_proj;
      // The perturbed map still fits exactly...
      CHECK(max_abs(delta * x) < 1e-9);
      // ...but is never smaller.
      CHECK(base <= frobenius_norm(fit.weights + delta) + 1e-9);
    }
  }

  TEST_CASE("bias via unit-row augmentation") {
    const Matrix x = oracle::random_matrix(3, 25, 9);
    const Matrix b0 = oracle::random_matrix(2, 3, 10);
    Matrix y = b0 * x;
    for (std::size_t j = 0; j < y.cols(); ++j) {
      y(0, j) += 1.5;
      y(1, j) -= 0.25;
    }
    const AffineMap fit = fit_least_squares(x, y, true);
    CHECK(oracle::max_abs_diff(fit.weights, b0) < 1e-9);
    CHECK(fit.bias[0] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(fit.bias[1] == doctest::Approx(-0.25).epsilon(1e-9));
    CHECK(fit.rank_used == 4);
  }

  TEST_CASE("centered data gives a vanishing bias") {
    Matrix x = oracle::random_matrix(4, 30, 11);
    Matrix y = oracle::random_matrix(2, 30, 12);
    for (Matrix* m : {&x, &y}) {
      for (std::size_t i = 0; i < m->rows(); ++i) {
        double mean = 0.0;
        for (double v : m->row(i)) mean += v;
        mean /= static_cast<double>(m->cols());
        for (double& v : m->row(i)) v -= mean;
      }
    }
    const AffineMap fit = fit_least_squares(x, y, true);
    CHECK(norm2(fit.bias) < 1e-8 * frobenius_norm(y));
  }

  TEST_CASE("fit rejects mismatched example counts") {
    CHECK_THROWS_AS(fit_least_squares(Matrix(3, 4), Matrix(2, 5), false), InvalidInput);
  }

  TEST_CASE("predict") {
    const AffineMap zero{Matrix(2, 3), Vector{1.0, -2.0}, 0};
    const Matrix out = predict(zero, oracle::random_matrix(3, 4, 13));
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(out(0, j) == 1.0);
      CHECK(out(1, j) == -2.0);
    }
    const Matrix x = oracle::random_matrix(3, 5, 14);
    CHECK(predict(AffineMap{Matrix::identity(3), Vector(3, 0.0), 3}, x) == x);

    const AffineMap map{oracle::random_matrix(2, 3, 15), Vector{0.3, -0.7}, 3};
    const Matrix got = predict(map, x);
    for (std::size_t j = 0; j < x.cols(); ++j)
      for (std::size_t i = 0; i < 2; ++i) {
        double s = map.bias[i];
        for (std::size_t k = 0; k < 3; ++k) s += map.weights(i, k) * x(k, j);
        CHECK(std::abs(got(i, j) - s) < 1e-12);
      }
    CHECK_THROWS_AS(predict(map, Matrix(4, 2)), InvalidInput);
  }

  TEST_CASE("projection onto the training span") {
    const Matrix x = oracle::random_matrix(6, 3, 16);
    const Vector col = x.column(1);
    const Vector same = project_onto_span(x, col);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(same[i] - col[i]) < 1e-9);

    const Matrix e12{{1, 0}, {0, 1}, {0, 0}};
    const Vector p = project_onto_span(e12, Vector{1, 2, 3});
    CHECK(std::abs(p[0] - 1) < 1e-15);
    CHECK(std::abs(p[1] - 2) < 1e-15);
    CHECK(std::abs(p[2]) < 1e-15);

    const Matrix x8 = oracle::random_matrix(8, 3, 17);
    Rng rng(18);
    const Vector v = oracle::random_vector(8, rng);
    const Vector proj = project_onto_span(x8, v);
    Vector resid(8);
    for (std::size_t i = 0; i < 8; ++i) resid[i] = v[i] - proj[i];
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(dot(resid, x8.column(j))) < 1e-9);
    const Vector twice = project_onto_span(x8, proj);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(twice[i] - proj[i]) < 1e-9);

    CHECK_THROWS_AS(project_onto_span(x8, Vector(7)), InvalidInput);
  }
}

#include <doctest.h>

#include <cmath>

#include "idon/errors.hpp"
#include "idon/linalg.hpp"
#include "test_util.hpp"

using namespace idon;
using namespace testutil;

TEST_CASE("cholesky identity") {
  const Mat l = linalg::cholesky(Mat::identity(3));
  CHECK(frob_diff_rel(l, Mat::identity(3)) == doctest::Approx(0.0));
}

TEST_CASE("cholesky 2x2 hand factorization") {
  Mat a(2, 2, {4, 2, 2, 3});
  const Mat l = linalg::cholesky(a);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky reconstruction on random SPD") {
  Rng rng(11);
  const Mat a = random_spd(6, rng);
  const Mat l = linalg::cholesky(a);
  const Mat rec = linalg::matmul(l, l, false, true);
  CHECK(frob_diff_rel(rec, a) < 1e-12);
}

TEST_CASE("cholesky reconstruction up to condition number 1e8") {
  // diag(1e8, ..., 1) rotated by a random orthogonal-ish similarity built
  // from a QR-free construction: D + small symmetric perturbation keeps the
  // spectrum spread while staying SPD.
  const int n = 8;
  Rng rng(13);
  Mat a(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = std::pow(10.0, 8.0 * (n - 1 - i) / (n - 1));
  const Mat q = random_mat(n, n, rng, 1e-2);
  Mat sym = linalg::matmul(q, q, true, false);
  for (std::size_t i = 0; i < a.size(); ++i) a.a[i] += sym.a[i];
  const Mat l = linalg::cholesky(a);
  const Mat rec = linalg::matmul(l, l, false, true);
  CHECK(frob_diff_rel(rec, a) < 1e-10);
}

TEST_CASE("cholesky rejects non-positive-definite input") {
  Mat a(2, 2, {1, 2, 2, 1});  // eigenvalues 3, -1
  CHECK_THROWS_AS(linalg::cholesky(a), NotPositiveDefinite);
}

TEST_CASE("cholesky rejects asymmetric input") {
  Mat a(2, 2, {1, 0.5, 0.1, 1});
  CHECK_THROWS_AS(linalg::cholesky(a), std::invalid_argument);
}

TEST_CASE("logdet identity and diagonal") {
  CHECK(linalg::logdet_spd(Mat::identity(5)) == doctest::Approx(0.0));
  Mat d(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 3.0;
  CHECK(linalg::logdet_spd(d) == doctest::Approx(std::log(6.0)));
}

TEST_CASE("logdet matches brute-force determinant") {
  Rng rng(7);
  const Mat a = random_spd(6, rng);
  const double ref = std::log(det_bruteforce(a));
  CHECK(linalg::logdet_spd(a) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("logdet vs brute force across dimensions") {
  for (int d = 1; d <= 8; ++d) {
    Rng rng(100 + d);
    const Mat a = random_spd(d, rng);
    const double det = std::exp(linalg::logdet_spd(a));
    const double ref = det_bruteforce(a);
    CHECK(std::fabs(det - ref) / std::fabs(ref) < 1e-8);
  }
}

TEST_CASE("solve_regularized_lsq identity") {
  Rng rng(3);
  const Vec s = random_vec(4, rng);
  const Vec b = linalg::solve_regularized_lsq(Mat::identity(4), s, 0.0);
  CHECK(max_abs_diff(b, s) < 1e-14);
}

TEST_CASE("solve_regularized_lsq least-squares mean") {
  Mat y(2, 1, {1, 1});
  const Vec b0 = linalg::solve_regularized_lsq(y, {1, 3}, 0.0);
  CHECK(b0[0] == doctest::Approx(2.0));
  // Normal-equations oracle with regularization: (2 + eps) b = 4.
  const Vec b1 = linalg::solve_regularized_lsq(y, {1, 3}, 1e-6);
  CHECK(b1[0] == doctest::Approx(4.0 / (2.0 + 1e-6)).epsilon(1e-14));
}

TEST_CASE("solve_regularized_lsq singular system") {
  Mat y(3, 2, {1, 1, 2, 2, 3, 3});  // rank 1
  CHECK_THROWS_AS(linalg::solve_regularized_lsq(y, {1, 2, 3}, 0.0), SingularSystem);
  // With regularization it just works.
  CHECK_NOTHROW(linalg::solve_regularized_lsq(y, {1, 2, 3}, 1e-6));
}

TEST_CASE("normal equations residual bound") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(300 + trial);
    const int k = 6 + static_cast<int>(rng.uniform_index(10));
    const int d = 1 + static_cast<int>(rng.uniform_index(6));
    const Mat y = random_mat(k, d, rng);
    const Vec s = random_vec(k, rng);
    const double eps = trial % 2 == 0 ? 1e-6 : 0.0;
    const Vec b = linalg::solve_regularized_lsq(y, s, eps);
    const Vec yts = linalg::matvec(y, s, true);
    const Vec yb = linalg::matvec(y, b);
    const Vec ytyb = linalg::matvec(y, yb, true);
    double resid = 0.0, rhs = 0.0;
    for (int i = 0; i < d; ++i) {
      resid = std::max(resid, std::fabs(ytyb[i] + eps * b[i] - yts[i]));
      rhs = std::max(rhs, std::fabs(yts[i]));
    }
    CHECK(resid < 1e-10 * (1.0 + rhs));
  }
}

TEST_CASE("solve_adjoint identity case") {
  Rng rng(5);
  const int n = 4;
  const Vec s = random_vec(n, rng);
  const Vec upstream = random_vec(n, rng);
  const Vec b = linalg::solve_regularized_lsq(Mat::identity(n), s, 0.0);
  const auto adj = linalg::solve_adjoint(Mat::identity(n), s, b, upstream, 0.0);
  CHECK(max_abs_diff(adj.grad_s, upstream) < 1e-12);
  // grad_Y = s lam^T - (lam b^T + b lam^T) with lam = upstream, b = s here.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double expect = s[i] * upstream[j] - upstream[i] * s[j] - s[i] * upstream[j];
      CHECK(adj.grad_y(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("solve_adjoint zero upstream") {
  Rng rng(6);
  const Mat y = random_mat(5, 3, rng);
  const Vec s = random_vec(5, rng);
  const Vec b = linalg::solve_regularized_lsq(y, s, 1e-8);
  const auto adj = linalg::solve_adjoint(y, s, b, Vec(3, 0.0), 1e-8);
  CHECK(max_abs(adj.grad_s) == 0.0);
  double m = 0.0;
  for (double v : adj.grad_y.a) m = std::max(m, std::fabs(v));
  CHECK(m == 0.0);
}

TEST_CASE("solve_adjoint matches finite differences") {
  Rng rng(9);
  const int k = 3, d = 2;
  const Mat y = random_mat(k, d, rng);
  const Vec s = random_vec(k, rng);
  const Vec upstream = random_vec(d, rng);
  const double eps = 1e-4;
  const Vec b = linalg::solve_regularized_lsq(y, s, eps);
  const auto adj = linalg::solve_adjoint(y, s, b, upstream, eps);

  auto scalarized = [&](const Mat& ym, const Vec& sm) {
    const Vec bb = linalg::solve_regularized_lsq(ym, sm, eps);
    return linalg::dot(bb.data(), upstream.data(), d);
  };
  const double h = 1e-6;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) {
      Mat yp = y, ym2 = y;
      yp(i, j) += h;
      ym2(i, j) -= h;
      const double fd = (scalarized(yp, s) - scalarized(ym2, s)) / (2.0 * h);
      CHECK(adj.grad_y(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
  for (int i = 0; i < k; ++i) {
    Vec sp = s, sm = s;
    sp[i] += h;
    sm[i] -= h;
    const double fd = (scalarized(y, sp) - scalarized(y, sm)) / (2.0 * h);
    CHECK(adj.grad_s[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("matmul transpose variants agree") {
  Rng rng(21);
  const Mat a = random_mat(4, 3, rng);
  const Mat b = random_mat(3, 5, rng);
  const Mat at = linalg::transpose(a);
  const Mat bt = linalg::transpose(b);
  const Mat ref = linalg::matmul(a, b);
  CHECK(frob_diff_rel(linalg::matmul(at, b, true, false), ref) < 1e-15);
  CHECK(frob_diff_rel(linalg::matmul(a, bt, false, true), ref) < 1e-15);
  CHECK(frob_diff_rel(linalg::matmul(at, bt, true, true), ref) < 1e-15);
}

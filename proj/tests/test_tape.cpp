#include <doctest.h>

#include <cmath>

#include "idon/errors.hpp"
#include "idon/tape.hpp"
#include "test_util.hpp"

using namespace idon;
using namespace testutil;
using ad::Tape;

TEST_CASE("grad of quadratic") {
  const Vec g = ad::grad(
      [](Tape& t, Tape::Var x) { return t.affine(t.sum(t.mul(x, x)), 0.5, 0.0); }, {1.0, 2.0});
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("grad of tanh(x0)*x1 by hand") {
  // tanh(0) = 0, tanh'(0) = 1, so the gradient at [0, 3] is [3, 0].
  const Vec g = ad::grad(
      [](Tape& t, Tape::Var x) {
        auto a = t.slice_cols(x, 0, 1);
        auto b = t.slice_cols(x, 1, 2);
        return t.sum(t.mul(t.tanh(a), b));
      },
      {0.0, 3.0});
  CHECK(g[0] == doctest::Approx(3.0));
  CHECK(g[1] == doctest::Approx(0.0));
}

namespace {

double eval_scalar(const ad::ScalarFn& f, const Vec& at) {
  Tape t;
  const auto x = t.input(Mat::from_row(at));
  return t.val(f(t, x))(0, 0);
}

void check_grad_fd(const ad::ScalarFn& f, const Vec& at, double tol = 1e-5) {
  const Vec g = ad::grad(f, at);
  const Vec fd = fd_gradient([&](const Vec& x) { return eval_scalar(f, x); }, at);
  for (std::size_t i = 0; i < at.size(); ++i)
    CHECK(std::fabs(g[i] - fd[i]) < tol * (1.0 + std::fabs(fd[i])));
}

}  // namespace

TEST_CASE("per-primitive gradients match finite differences") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(4));
    const Vec at = random_vec(n, rng, 0.8);
    const Vec c = random_vec(n, rng);
    const Mat cmat = Mat::from_row(c);
    switch (trial % 6) {
      case 0:  // add + affine
        check_grad_fd(
            [&](Tape& t, Tape::Var x) {
              return t.sum(t.mul(t.constant(cmat), t.add(x, t.affine(x, 2.0, 0.3))));
            },
            at);
        break;
      case 1:  // mul
        check_grad_fd(
            [&](Tape& t, Tape::Var x) { return t.sum(t.mul(t.constant(cmat), t.mul(x, x))); },
            at);
        break;
      case 2:  // tanh
        check_grad_fd(
            [&](Tape& t, Tape::Var x) { return t.sum(t.mul(t.constant(cmat), t.tanh(x))); }, at);
        break;
      case 3:  // exp
        check_grad_fd(
            [&](Tape& t, Tape::Var x) { return t.sum(t.mul(t.constant(cmat), t.exp(x))); }, at);
        break;
      case 4: {  // matmul with a constant matrix
        const Mat w = random_mat(n, n, rng);
        check_grad_fd(
            [&](Tape& t, Tape::Var x) {
              return t.sum(t.mul(t.constant(cmat), t.matmul(x, t.constant(w), false, true)));
            },
            at);
        break;
      }
      case 5: {  // solve: b*(s) with fixed Y
        const int kk = n + 2;
        const Mat y = random_mat(kk, n, rng);
        const Vec s = random_vec(kk, rng);
        check_grad_fd(
            [&](Tape& t, Tape::Var x) {
              // x enters through s: s + x padded... simpler: x scales Y rows?
              // Treat x as the D-dim weight on the solve output with s const.
              auto b = t.solve_lsq(t.constant(y), t.constant(Mat::from_row(s)), 1e-6);
              return t.sum(t.mul(x, b));
            },
            at);
        break;
      }
    }
  }
}

TEST_CASE("solve_lsq gradient w.r.t. Y and s matches finite differences") {
  Rng rng(55);
  const int kk = 5, d = 3;
  const Mat y0 = random_mat(kk, d, rng);
  const Mat s0 = random_mat(2, kk, rng);  // two stacked right-hand sides
  const Vec w = random_vec(2 * d, rng);
  const double eps = 1e-4;

  auto loss_from = [&](const Mat& y, const Mat& s) {
    Tape t;
    auto b = t.solve_lsq(t.input(y), t.input(s), eps);
    double acc = 0.0;
    const Mat& bv = t.val(b);
    for (int i = 0; i < bv.rows; ++i)
      for (int j = 0; j < bv.cols; ++j) acc += w[i * d + j] * bv(i, j);
    return acc;
  };

  Tape t;
  const auto vy = t.input(y0);
  const auto vs = t.input(s0);
  const auto b = t.solve_lsq(vy, vs, eps);
  const auto loss = t.sum(t.mul(b, t.constant(Mat(2, d, Vec(w)))));
  t.backward(loss);

  const double h = 1e-6;
  for (int i = 0; i < kk; ++i)
    for (int j = 0; j < d; ++j) {
      Mat yp = y0, ym = y0;
      yp(i, j) += h;
      ym(i, j) -= h;
      const double fd = (loss_from(yp, s0) - loss_from(ym, s0)) / (2 * h);
      CHECK(t.grad(vy)(i, j) == doctest::Approx(fd).epsilon(2e-5));
    }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < kk; ++j) {
      Mat sp = s0, sm = s0;
      sp(i, j) += h;
      sm(i, j) -= h;
      const double fd = (loss_from(y0, sp) - loss_from(y0, sm)) / (2 * h);
      CHECK(t.grad(vs)(i, j) == doctest::Approx(fd).epsilon(2e-5));
    }
}

TEST_CASE("random tanh MLP gradient vs finite differences") {
  // Two-layer tanh network with ~50 parameters collapsed to a scalar loss.
  const int in = 4, hid = 6;
  Rng rng(77);
  const int n_params = hid * in + hid + hid;  // W1, b1, w2
  const Vec at = random_vec(n_params, rng, 0.5);
  const Vec x0 = random_vec(in, rng);

  const ad::ScalarFn f = [&](Tape& t, Tape::Var p) {
    auto w1 = t.slice_cols(p, 0, hid * in);
    auto b1 = t.slice_cols(p, hid * in, hid * in + hid);
    auto w2 = t.slice_cols(p, hid * in + hid, n_params);
    // H_j = tanh(sum_i x_i W1[j*in + i] + b1_j), built from flat slices.
    Mat xrep(1, hid * in);
    for (int j = 0; j < hid; ++j)
      for (int i = 0; i < in; ++i) xrep(0, j * in + i) = x0[i];
    auto prods = t.mul(w1, t.constant(xrep));
    Tape::Var hrow = t.sum(t.slice_cols(prods, 0, in));
    for (int j = 1; j < hid; ++j)
      hrow = t.concat_cols(hrow, t.sum(t.slice_cols(prods, j * in, (j + 1) * in)));
    auto h = t.tanh(t.add(hrow, b1));
    return t.sum(t.mul(h, w2));
  };

  const Vec g = ad::grad(f, at);
  const Vec fd = fd_gradient([&](const Vec& p) { return eval_scalar(f, p); }, at);
  for (int i = 0; i < n_params; ++i)
    CHECK(std::fabs(g[i] - fd[i]) < 1e-5 * (1.0 + std::fabs(fd[i])));
}

TEST_CASE("gradients are bit-deterministic") {
  Rng rng(99);
  const Vec at = random_vec(10, rng);
  const ad::ScalarFn f = [](Tape& t, Tape::Var x) {
    return t.sum(t.mul(t.tanh(x), t.exp(t.affine(x, -0.5, 0.1))));
  };
  const Vec g1 = ad::grad(f, at);
  const Vec g2 = ad::grad(f, at);
  for (std::size_t i = 0; i < at.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("grad flags non-finite results") {
  // exp of a huge value overflows to inf.
  CHECK_THROWS_AS(ad::grad([](Tape& t, Tape::Var x) { return t.sum(t.exp(t.affine(x, 1000.0, 0.0))); },
                           {5.0}),
                  NonFiniteGradient);
}

TEST_CASE("detach blocks gradient flow") {
  Tape t;
  const auto x = t.input(Mat::from_row({2.0}));
  const auto frozen = t.detach(t.mul(x, x));
  const auto loss = t.sum(t.mul(x, frozen));
  t.backward(loss);
  // d/dx of x * detach(x^2) = x^2 only.
  CHECK(t.grad(x)(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("structural ops round-trip gradients") {
  Rng rng(123);
  const Vec at = random_vec(6, rng);
  check_grad_fd(
      [](Tape& t, Tape::Var x) {
        auto r = t.reverse_cols(x);
        auto a = t.slice_cols(r, 0, 3);
        auto b = t.slice_cols(r, 3, 6);
        auto joined = t.concat_cols(t.mul(a, b), t.add(a, b));
        return t.sum(t.mul(joined, joined));
      },
      at);
  check_grad_fd(
      [](Tape& t, Tape::Var x) {
        auto m = t.matmul(x, x, true, false);  // outer-ish product
        return t.affine(t.row_sum(t.sum(m)), 1.0, 0.0);
      },
      at, 1e-4);
}

#include "idon/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "idon/errors.hpp"

namespace idon::linalg {

bool all_finite(const Mat& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double dot(const double* x, const double* y, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

Vec matvec(const Mat& a, const Vec& x, bool trans) {
  if (!trans) {
    assert(static_cast<int>(x.size()) == a.cols);
    Vec y(a.rows);
    for (int i = 0; i < a.rows; ++i) y[i] = dot(a.row(i), x.data(), a.cols);
    return y;
  }
  assert(static_cast<int>(x.size()) == a.rows);
  Vec y(a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    const double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) y[j] += xi * r[j];
  }
  return y;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

namespace {

// C = A B with A (m x k), B (k x n); ikj order keeps the B rows streaming.
void mm_nn(const Mat& a, const Mat& b, Mat& c) {
  const int m = a.rows, kk = a.cols, n = b.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * kk * n > 200000)
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int k = 0; k < kk; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k);
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

// C = A B^T; rows of both stream, inner product form.
void mm_nt(const Mat& a, const Mat& b, Mat& c) {
  const int m = a.rows, kk = a.cols, n = b.rows;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * kk * n > 200000)
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int j = 0; j < n; ++j) ci[j] = dot(ai, b.row(j), kk);
  }
}

// C = A^T B.
void mm_tn(const Mat& a, const Mat& b, Mat& c) {
  const int m = a.cols, kk = a.rows, n = b.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * kk * n > 200000)
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    for (int k = 0; k < kk; ++k) {
      const double aki = a(k, i);
      const double* bk = b.row(k);
      for (int j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
}

}  // namespace

Mat matmul(const Mat& a, const Mat& b, bool trans_a, bool trans_b) {
  const int m = trans_a ? a.cols : a.rows;
  const int n = trans_b ? b.rows : b.cols;
  assert((trans_a ? a.rows : a.cols) == (trans_b ? b.cols : b.rows));
  Mat c(m, n);
  if (!trans_a && !trans_b) {
    mm_nn(a, b, c);
  } else if (!trans_a && trans_b) {
    mm_nt(a, b, c);
  } else if (trans_a && !trans_b) {
    mm_tn(a, b, c);
  } else {
    // A^T B^T = (B A)^T; rare path, fine to materialize.
    c = transpose(matmul(b, a, false, false));
  }
  return c;
}

Mat cholesky(const Mat& a) {
  assert(a.rows == a.cols);
  const int n = a.rows;
  double max_abs = 0.0;
  for (double v : a.a) max_abs = std::max(max_abs, std::fabs(v));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > 1e-10 * (1.0 + max_abs))
        throw std::invalid_argument("cholesky: matrix is not symmetric");

  Mat l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j) - dot(l.row(j), l.row(j), j);
    if (!(d > 0.0))
      throw NotPositiveDefinite("cholesky: nonpositive pivot at index " + std::to_string(j));
    d = std::sqrt(d);
    l(j, j) = d;
    const double inv = 1.0 / d;
#pragma omp parallel for schedule(static) if (n - j > 64 && j > 32)
    for (int i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - dot(l.row(i), l.row(j), j)) * inv;
  }
  return l;
}

Vec cholesky_solve(const Mat& l, const Vec& b) {
  const int n = l.rows;
  assert(static_cast<int>(b.size()) == n);
  Vec x = b;
  for (int i = 0; i < n; ++i) x[i] = (x[i] - dot(l.row(i), x.data(), i)) / l(i, i);
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

double logdet_from_cholesky(const Mat& l) {
  double s = 0.0;
  for (int i = 0; i < l.rows; ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double logdet_spd(const Mat& a) { return logdet_from_cholesky(cholesky(a)); }

LsqFactor factor_lsq(const Mat& y, double eps) {
  assert(eps >= 0.0);
  Mat normal = matmul(y, y, true, false);
  for (int i = 0; i < normal.rows; ++i) normal(i, i) += eps;
  LsqFactor f;
  f.y = y;
  f.eps = eps;
  try {
    f.chol = cholesky(normal);
  } catch (const NotPositiveDefinite&) {
    if (eps == 0.0)
      throw SingularSystem("solve_regularized_lsq: Y^T Y is rank-deficient and eps = 0");
    throw;
  }
  return f;
}

Vec LsqFactor::solve_normal(const Vec& rhs) const { return cholesky_solve(chol, rhs); }

Vec LsqFactor::solve(const Vec& s) const {
  const Vec rhs = matvec(y, s, /*trans=*/true);
  Vec b = cholesky_solve(chol, rhs);
  // One refinement pass knocks the normal-equations residual down to
  // O(machine eps) even for badly conditioned Y.
  Vec r = rhs;
  const Vec yb = matvec(y, b);
  const Vec ytyb = matvec(y, yb, /*trans=*/true);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ytyb[i] + eps * b[i];
  const Vec corr = cholesky_solve(chol, r);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += corr[i];
  return b;
}

Vec solve_regularized_lsq(const Mat& y, const Vec& s, double eps) {
  return factor_lsq(y, eps).solve(s);
}

LsqAdjoint solve_adjoint(const Mat& y, const Vec& s, const Vec& b_star, const Vec& upstream,
                         double eps) {
  const LsqFactor f = factor_lsq(y, eps);
  const Vec lam = f.solve_normal(upstream);
  LsqAdjoint out;
  out.grad_s = matvec(y, lam);
  const int kk = y.rows, d = y.cols;
  // M = lam b*^T + b* lam^T (D x D), then grad_Y = s lam^T - Y M.
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = lam[i] * b_star[j] + b_star[i] * lam[j];
  Mat ym = matmul(y, m);
  out.grad_y = Mat(kk, d);
  for (int k = 0; k < kk; ++k)
    for (int j = 0; j < d; ++j) out.grad_y(k, j) = s[k] * lam[j] - ym(k, j);
  return out;
}

}  // namespace idon::linalg

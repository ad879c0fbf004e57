#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace idon {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
    assert(a.size() == static_cast<std::size_t>(r) * c);
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return a.size(); }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat from_row(const Vec& v) { return Mat(1, static_cast<int>(v.size()), v); }
  static Mat from_col(const Vec& v) { return Mat(static_cast<int>(v.size()), 1, v); }
};

namespace linalg {

bool all_finite(const Mat& m);
bool all_finite(const Vec& v);

double dot(const double* x, const double* y, int n);

/// y = A x (or A^T x when trans); accumulation order matches matmul rows.
Vec matvec(const Mat& a, const Vec& x, bool trans = false);

/// C = op(A) op(B), op controlled by trans flags.
Mat matmul(const Mat& a, const Mat& b, bool trans_a = false, bool trans_b = false);

Mat transpose(const Mat& a);

/// Lower-triangular Cholesky factor L with L L^T = a.
/// Throws NotPositiveDefinite if a pivot is <= 0; the caller may retry with
/// diagonal jitter. `a` must be symmetric to 1e-10 relative.
Mat cholesky(const Mat& a);

/// Solves L y = b (forward) then L^T x = y (backward) in place.
Vec cholesky_solve(const Mat& chol_lower, const Vec& b);

/// log det(a) for SPD a, computed as 2 sum(log L_ii).
double logdet_spd(const Mat& a);

double logdet_from_cholesky(const Mat& chol_lower);

/// Prefactored normal-equations operator for min_b |s - Y b|^2 + eps |b|^2.
/// The factorization of (Y^T Y + eps I) is built once and reused over many
/// right-hand sides (all samples of a batch share Y, Eq. solve path and its
/// adjoint both route through it).
struct LsqFactor {
  Mat y;           // K x D
  Mat chol;        // lower factor of Y^T Y + eps I (D x D)
  double eps = 0.0;

  /// argmin_b |s - Y b|^2 + eps |b|^2 with one step of iterative refinement.
  Vec solve(const Vec& s) const;

  /// Applies (Y^T Y + eps I)^{-1} to an arbitrary D-vector.
  Vec solve_normal(const Vec& rhs) const;
};

/// Throws SingularSystem when eps == 0 and Y^T Y is rank-deficient.
LsqFactor factor_lsq(const Mat& y, double eps);

/// One-shot version of LsqFactor::solve (Eq. 12 path).
Vec solve_regularized_lsq(const Mat& y, const Vec& s, double eps);

/// Adjoint of b* = (Y^T Y + eps I)^{-1} Y^T s.
/// With lam = (Y^T Y + eps I)^{-1} upstream:
///   grad_s = Y lam,  grad_Y = s lam^T - Y (lam b*^T + b* lam^T).
struct LsqAdjoint {
  Mat grad_y;
  Vec grad_s;
};
LsqAdjoint solve_adjoint(const Mat& y, const Vec& s, const Vec& b_star, const Vec& upstream,
                         double eps);

}  // namespace linalg
}  // namespace idon

#pragma once

#include <cmath>
#include <functional>

#include "idon/linalg.hpp"
#include "idon/networks.hpp"
#include "idon/rng.hpp"

namespace testutil {

using idon::Mat;
using idon::Vec;

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

inline double frob_diff_rel(const Mat& a, const Mat& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.a[i] - b.a[i];
    num += d * d;
    den += b.a[i] * b.a[i];
  }
  return std::sqrt(num) / std::sqrt(den + 1e-300);
}

inline Vec random_vec(int n, idon::Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline Mat random_mat(int r, int c, idon::Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (double& x : m.a) x = scale * rng.normal();
  return m;
}

// M^T M + I: comfortably SPD.
inline Mat random_spd(int n, idon::Rng& rng) {
  const Mat m = random_mat(n, n, rng);
  Mat a = idon::linalg::matmul(m, m, true, false);
  for (int i = 0; i < n; ++i) a(i, i) += 1.0;
  return a;
}

// Cofactor expansion; exponential cost, fine for n <= 8.
inline double det_bruteforce(const Mat& a) {
  const int n = a.rows;
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    Mat minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = a(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * det_bruteforce(minor);
  }
  return det;
}

// Central-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  Vec xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat jac(static_cast<int>(f0.size()), static_cast<int>(x.size()));
  Vec xp = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = xp[j];
    xp[j] = orig + h;
    const Vec fp = f(xp);
    xp[j] = orig - h;
    const Vec fm = f(xp);
    xp[j] = orig;
    for (std::size_t i = 0; i < f0.size(); ++i)
      jac(static_cast<int>(i), static_cast<int>(j)) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return jac;
}

// log|det| via Gaussian elimination with partial pivoting (test oracle for
// D where cofactor expansion is too slow).
inline double logabsdet_lu(Mat a) {
  const int n = a.rows;
  double logdet = 0.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a(i, k)) > std::fabs(a(piv, k))) piv = i;
    if (piv != k)
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
    logdet += std::log(std::fabs(a(k, k)));
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return logdet;
}

// Small random network helper shared by several suites.
inline idon::nets::DeepONetSpec small_spec(int dim, int coord_dim = 1, int blocks = 2) {
  idon::nets::DeepONetSpec spec;
  spec.dim = dim;
  spec.coord_dim = coord_dim;
  spec.branch_blocks = blocks;
  spec.subnet_layers = 2;
  spec.trunk_layers = 3;
  spec.trunk_width = dim;
  return spec;
}

// Random branch parameters where every subnet weight (including the zero-
// initialized final k layers) is perturbed, so couplings genuinely scale.
inline idon::nets::DeepONetParams random_params(const idon::nets::DeepONetSpec& spec,
                                                std::uint64_t seed, double jolt = 0.3) {
  idon::nets::DeepONetParams p = idon::nets::init_params(spec, seed);
  idon::Rng rng(seed ^ 0xFEED);
  Vec flat = idon::nets::flatten(p);
  for (double& v : flat) v += jolt * rng.normal() * 0.1;
  idon::nets::unflatten(flat, p);
  return p;
}

}  // namespace testutil

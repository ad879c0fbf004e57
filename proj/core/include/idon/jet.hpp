#pragma once

#include <cmath>
#include <vector>

#include "idon/linalg.hpp"

namespace idon::ad {

/// Truncated second-order Taylor coefficient triple along one direction:
/// value, first and second directional derivative. Arithmetic follows the
/// usual rules, e.g. for y = f(x):
///   y.d1 = f'(x) x.d1
///   y.d2 = f''(x) x.d1^2 + f'(x) x.d2
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  Jet2() = default;
  Jet2(double value) : v(value) {}  // NOLINT: implicit constants are intended
  Jet2(double value, double first, double second) : v(value), d1(first), d2(second) {}
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

inline Jet2 operator*(double c, const Jet2& a) { return {c * a.v, c * a.d1, c * a.d2}; }
inline Jet2 operator*(const Jet2& a, double c) { return c * a; }
inline Jet2 operator+(const Jet2& a, double c) { return {a.v + c, a.d1, a.d2}; }
inline Jet2 operator+(double c, const Jet2& a) { return a + c; }
inline Jet2 operator-(const Jet2& a, double c) { return {a.v - c, a.d1, a.d2}; }
inline Jet2 operator-(double c, const Jet2& a) { return {c - a.v, -a.d1, -a.d2}; }

inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double inv = 1.0 / b.v;
  const double v = a.v * inv;
  const double d1 = (a.d1 - v * b.d1) * inv;
  const double d2 = (a.d2 - 2.0 * d1 * b.d1 - v * b.d2) * inv;
  return {v, d1, d2};
}

inline Jet2 tanh(const Jet2& x) {
  const double t = std::tanh(x.v);
  const double sech2 = 1.0 - t * t;        // f'
  const double fpp = -2.0 * t * sech2;     // f''
  return {t, sech2 * x.d1, fpp * x.d1 * x.d1 + sech2 * x.d2};
}

inline Jet2 exp(const Jet2& x) {
  const double e = std::exp(x.v);
  return {e, e * x.d1, e * (x.d1 * x.d1 + x.d2)};
}

inline Jet2 sin(const Jet2& x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return {s, c * x.d1, -s * x.d1 * x.d1 + c * x.d2};
}

inline Jet2 cos(const Jet2& x) {
  const double c = std::cos(x.v), s = std::sin(x.v);
  return {c, -s * x.d1, -c * x.d1 * x.d1 - s * x.d2};
}

inline Jet2 log(const Jet2& x) {
  const double inv = 1.0 / x.v;
  return {std::log(x.v), inv * x.d1, inv * x.d2 - inv * inv * x.d1 * x.d1};
}

/// Evaluates f elementwise on Jet2 inputs seeded from x with direction dir:
/// input i carries (x_i, dir_i, 0). Returns per-output triples.
template <class F>
std::vector<Jet2> directional_jet2(F&& f, const Vec& x, const Vec& dir) {
  std::vector<Jet2> in(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) in[i] = Jet2(x[i], dir[i], 0.0);
  return f(in);
}

}  // namespace idon::ad

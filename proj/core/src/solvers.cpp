#include <cassert>
#include <cmath>

#include "idon/errors.hpp"
#include "idon/problems.hpp"

namespace idon::prob {

Vec solve_antiderivative(const Vec& u_fine, const Vec& grid) {
  assert(u_fine.size() == grid.size());
  Vec s(u_fine.size(), 0.0);
  for (std::size_t i = 1; i < u_fine.size(); ++i)
    s[i] = s[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (u_fine[i] + u_fine[i - 1]);
  return s;
}

namespace {

// Thomas algorithm for a constant-coefficient tridiagonal system
// (diag d, off-diagonals o); rhs is overwritten with the solution.
void tridiag_solve(double d, double o, Vec& rhs, Vec& scratch) {
  const int n = static_cast<int>(rhs.size());
  scratch.resize(n);
  scratch[0] = o / d;
  rhs[0] /= d;
  for (int i = 1; i < n; ++i) {
    const double m = 1.0 / (d - o * scratch[i - 1]);
    scratch[i] = o * m;
    rhs[i] = (rhs[i] - o * rhs[i - 1]) * m;
  }
  for (int i = n - 2; i >= 0; --i) rhs[i] -= scratch[i] * rhs[i + 1];
}

Mat solve_rd_impl(const std::function<double(double, double)>& forcing, const Vec& xgrid,
                  const RdConfig& cfg) {
  const int nx = static_cast<int>(xgrid.size());
  assert(nx >= 3 && cfg.nt >= 1);
  const double dx = xgrid[1] - xgrid[0];
  const double dt = cfg.t_end / cfg.nt;
  const double r = cfg.diffusion * dt / (dx * dx);

  Mat field(cfg.nt + 1, nx);  // row j = time level j; s(.,0) = 0
  const int m = nx - 2;       // interior unknowns
  Vec rhs(m), scratch;
  for (int step = 1; step <= cfg.nt; ++step) {
    const double t_new = step * dt;
    const double* prev = field.row(step - 1);
    for (int i = 0; i < m; ++i) {
      const double s_old = prev[i + 1];
      rhs[i] = s_old + dt * (cfg.reaction * s_old * s_old + forcing(xgrid[i + 1], t_new));
    }
    tridiag_solve(1.0 + 2.0 * r, -r, rhs, scratch);
    double* cur = field.row(step);
    cur[0] = 0.0;
    cur[nx - 1] = 0.0;
    for (int i = 0; i < m; ++i) {
      if (std::fabs(rhs[i]) > 1e6)
        throw SolverDiverged("reaction-diffusion solve exceeded 1e6 at step " +
                             std::to_string(step));
      cur[i + 1] = rhs[i];
    }
  }
  return field;
}

}  // namespace

Mat solve_reaction_diffusion(const Vec& u, const Vec& xgrid, const RdConfig& cfg) {
  assert(u.size() == xgrid.size());
  return solve_rd_impl([&](double x, double) { return interp_linear(xgrid, u, x); }, xgrid, cfg);
}

Mat solve_reaction_diffusion_forced(const std::function<double(double, double)>& forcing,
                                    const Vec& xgrid, const RdConfig& cfg) {
  return solve_rd_impl(forcing, xgrid, cfg);
}

namespace {

// Banded SPD Cholesky; band(i, d) stores A(i, i-d), 0 <= d <= bw.
void band_cholesky(Mat& band, int bw) {
  const int n = band.rows;
  for (int i = 0; i < n; ++i) {
    const int j0 = std::max(0, i - bw);
    for (int j = j0; j <= i; ++j) {
      double sum = band(i, i - j);
      const int k0 = std::max(j0, j - bw);
      for (int k = k0; k < j; ++k) sum -= band(i, i - k) * band(j, j - k);
      if (i == j) {
        if (!(sum > 0.0))
          throw NotPositiveDefinite("darcy system lost positive definiteness (u <= 0?)");
        band(i, 0) = std::sqrt(sum);
      } else {
        band(i, i - j) = sum / band(j, 0);
      }
    }
  }
}

void band_solve(const Mat& band, int bw, Vec& x) {
  const int n = band.rows;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    const int k0 = std::max(0, i - bw);
    for (int k = k0; k < i; ++k) s -= band(i, i - k) * x[k];
    x[i] = s / band(i, 0);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    const int k1 = std::min(n - 1, i + bw);
    for (int k = i + 1; k <= k1; ++k) s -= band(k, k - i) * x[k];
    x[i] = s / band(i, 0);
  }
}

}  // namespace

Mat solve_darcy(const Mat& u_nodes, double source) {
  const int n = u_nodes.rows;
  assert(u_nodes.cols == n && n >= 3);
  for (double v : u_nodes.a)
    if (!(v > 0.0)) throw NotPositiveDefinite("solve_darcy: permeability must be positive");

  const int m = n - 2;  // interior per axis
  const int nun = m * m;
  const int bw = m;
  const double h = 1.0 / (n - 1);
  const double inv_h2 = 1.0 / (h * h);

  // -div(u grad s) assembled in SPD form; unknown (i,j) -> row i*m + j.
  Mat band(nun, bw + 1);
  Vec rhs(nun, -source);
  auto face = [&](int i1, int j1, int i2, int j2) {
    return 0.5 * (u_nodes(i1, j1) + u_nodes(i2, j2));
  };
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const int row = (i - 1) * m + (j - 1);
      const double aw = face(i, j, i - 1, j);
      const double ae = face(i, j, i + 1, j);
      const double as = face(i, j, i, j - 1);
      const double an = face(i, j, i, j + 1);
      band(row, 0) = (aw + ae + as + an) * inv_h2;
      if (j > 1) band(row, 1) = -as * inv_h2;       // (i, j-1)
      if (i > 1) band(row, bw) = -aw * inv_h2;      // (i-1, j)
    }
  }
  band_cholesky(band, bw);
  band_solve(band, bw, rhs);

  Mat s(n, n);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) s(i, j) = rhs[(i - 1) * m + (j - 1)];
  return s;
}

double interp_linear(const Vec& xs, const Vec& ys, double x) {
  const int n = static_cast<int>(xs.size());
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  int lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (xs[mid] <= x ? lo : hi) = mid;
  }
  const double w = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
  return (1.0 - w) * ys[lo] + w * ys[lo + 1];
}

double interp_bilinear_unit(const Mat& field, double x1, double x2) {
  const int r = field.rows, c = field.cols;
  double fi = x1 * (r - 1), fj = x2 * (c - 1);
  fi = std::min(std::max(fi, 0.0), static_cast<double>(r - 1));
  fj = std::min(std::max(fj, 0.0), static_cast<double>(c - 1));
  const int i = std::min(static_cast<int>(fi), r - 2);
  const int j = std::min(static_cast<int>(fj), c - 2);
  const double wi = fi - i, wj = fj - j;
  return (1.0 - wi) * ((1.0 - wj) * field(i, j) + wj * field(i, j + 1)) +
         wi * ((1.0 - wj) * field(i + 1, j) + wj * field(i + 1, j + 1));
}

FieldEval eval_feature_field(const FeatureField& field, double x1, double x2) {
  assert(field.c.size() == 64);
  double g = 0.0, g1 = 0.0, g2 = 0.0;
  for (int f1 = 1; f1 <= 4; ++f1) {
    const double s1 = std::sin(f1 * x1), c1 = std::cos(f1 * x1);
    for (int f2 = 1; f2 <= 4; ++f2) {
      const double s2 = std::sin(f2 * x2), c2 = std::cos(f2 * x2);
      const int base = ((f1 - 1) * 4 + (f2 - 1)) * 4;
      const double ca = field.c[base + 0];
      const double cb = field.c[base + 1];
      const double cc = field.c[base + 2];
      const double cd = field.c[base + 3];
      g += ca * s1 * c2 + cb * s1 * s2 + cc * c1 * s2 + cd * c1 * c2;
      g1 += f1 * (ca * c1 * c2 + cb * c1 * s2 - cc * s1 * s2 - cd * s1 * c2);
      g2 += f2 * (-ca * s1 * s2 + cb * s1 * c2 + cc * c1 * c2 - cd * c1 * s2);
    }
  }
  FieldEval out;
  out.u = std::exp(g);
  out.du1 = out.u * g1;
  out.du2 = out.u * g2;
  return out;
}

Mat eval_feature_field_grid(const FeatureField& field, const Vec& xs, const Vec& ys) {
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  // Separable trig tables over each axis.
  Mat s1(4, nx), c1(4, nx), s2(4, ny), c2(4, ny);
  for (int f = 1; f <= 4; ++f) {
    for (int i = 0; i < nx; ++i) {
      s1(f - 1, i) = std::sin(f * xs[i]);
      c1(f - 1, i) = std::cos(f * xs[i]);
    }
    for (int j = 0; j < ny; ++j) {
      s2(f - 1, j) = std::sin(f * ys[j]);
      c2(f - 1, j) = std::cos(f * ys[j]);
    }
  }
  Mat u(nx, ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      double g = 0.0;
      for (int f1 = 0; f1 < 4; ++f1) {
        for (int f2 = 0; f2 < 4; ++f2) {
          const int base = (f1 * 4 + f2) * 4;
          g += field.c[base + 0] * s1(f1, i) * c2(f2, j) +
               field.c[base + 1] * s1(f1, i) * s2(f2, j) +
               field.c[base + 2] * c1(f1, i) * s2(f2, j) +
               field.c[base + 3] * c1(f1, i) * c2(f2, j);
        }
      }
      u(i, j) = std::exp(g);
    }
  }
  return u;
}

}  // namespace idon::prob

#include <cmath>

#include "idon/errors.hpp"
#include "idon/problems.hpp"

namespace idon::prob {

Mat gp_covariance(const GpSpec& spec, const Mat& pts) {
  const int n = pts.rows;
  Mat cov(n, n);
  const double inv2l2 = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double r2 = 0.0;
      for (int c = 0; c < pts.cols; ++c) {
        const double d = pts(i, c) - pts(j, c);
        r2 += d * d;
      }
      const double v = spec.variance * std::exp(-r2 * inv2l2);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

GpSampler::GpSampler(const GpSpec& spec, Mat grid) : spec_(spec), grid_(std::move(grid)) {
  Mat cov = gp_covariance(spec_, grid_);
  try {
    chol_ = linalg::cholesky(cov);
  } catch (const NotPositiveDefinite&) {
    double trace = 0.0;
    for (int i = 0; i < cov.rows; ++i) trace += cov(i, i);
    const double jitter = 1e-10 * trace / cov.rows;
    for (int i = 0; i < cov.rows; ++i) cov(i, i) += jitter;
    chol_ = linalg::cholesky(cov);  // second failure propagates
  }
}

Vec GpSampler::draw_centered(Rng& rng) const {
  const int n = grid_.rows;
  Vec z(n);
  for (double& v : z) v = rng.normal();
  // L z with L lower triangular.
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = linalg::dot(chol_.row(i), z.data(), i + 1);
  return out;
}

Vec GpSampler::draw(Rng& rng) const {
  Vec out = draw_centered(rng);
  if (spec_.mean != 0.0)
    for (double& v : out) v += spec_.mean;
  return out;
}

std::vector<Vec> sample_gp(const GpSpec& spec, const Mat& grid, int n, std::uint64_t seed) {
  const GpSampler sampler(spec, grid);
  std::vector<Vec> out(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    out[i] = sampler.draw(rng);
  }
  return out;
}

}  // namespace idon::prob

#include <cmath>
#include <limits>

#include "idon/bayes.hpp"
#include "idon/errors.hpp"

namespace idon::bayes {

namespace {

Mat cholesky_jittered(const Mat& a) {
  try {
    return linalg::cholesky(a);
  } catch (const NotPositiveDefinite&) {
    double trace = 0.0;
    for (int i = 0; i < a.rows; ++i) trace += a(i, i);
    Mat b = a;
    const double jitter = 1e-10 * trace / a.rows;
    for (int i = 0; i < a.rows; ++i) b(i, i) += jitter;
    return linalg::cholesky(b);
  }
}

Mat spd_inverse(const Mat& chol) {
  const int d = chol.rows;
  Mat inv(d, d);
  Vec e(d, 0.0);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    const Vec col = linalg::cholesky_solve(chol, e);
    for (int i = 0; i < d; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  // Symmetrize away column-solve roundoff.
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

}  // namespace

Mat pushforward_samples(const nets::BranchParams& branch, const PriorSampler& prior_u, int n,
                        std::uint64_t seed) {
  Mat out;
  for (int i = 0; i < n; ++i) {
    Rng rng(Rng::derive(seed, i));
    const Vec u = prior_u(rng);
    const Vec b = nets::branch_forward(branch, u).b;
    if (out.size() == 0) out = Mat(n, static_cast<int>(b.size()));
    std::copy(b.begin(), b.end(), out.row(i));
  }
  return out;
}

GaussianMixture posterior_update(const GaussianMixture& prior, const ObservationModel& obs) {
  const Mat& y = obs.ym.yeff;
  const int kk = y.rows, d = y.cols;
  const double inv_s2 = 1.0 / obs.sigma2;

  const Mat yty = linalg::matmul(y, y, true, false);
  const Vec yts = linalg::matvec(y, obs.s_hat, /*trans=*/true);

  GaussianMixture post;
  const int m = prior.components();
  post.weights.resize(m);
  Vec logw(m);

  for (int c = 0; c < m; ++c) {
    const Mat chol_s = cholesky_jittered(prior.covs[c]);
    const Mat s_inv = spd_inverse(chol_s);

    Mat c_inv(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) c_inv(i, j) = inv_s2 * yty(i, j) + s_inv(i, j);
    const Mat chol_c = cholesky_jittered(c_inv);

    // mu solves C^{-1} mu = sigma^-2 Y^T s_hat + S^{-1} m.
    Vec rhs = linalg::matvec(s_inv, prior.means[c]);
    for (int i = 0; i < d; ++i) rhs[i] += inv_s2 * yts[i];
    post.means.push_back(linalg::cholesky_solve(chol_c, rhs));
    post.covs.push_back(spd_inverse(chol_c));

    // Weight via the D x D equivalents of |D_m| and r^T D_m^{-1} r with
    // D_m = sigma^2 I + Y S Y^T and r = s_hat - Y m:
    //   log|D_m| = K log sigma^2 + log|S| + log|C^{-1}|
    //   r^T D_m^{-1} r = sigma^-2 |r|^2 - sigma^-4 (Y^T r)^T C (Y^T r).
    const Vec ym = linalg::matvec(y, prior.means[c]);
    Vec r(kk);
    double r2 = 0.0;
    for (int i = 0; i < kk; ++i) {
      r[i] = obs.s_hat[i] - ym[i];
      r2 += r[i] * r[i];
    }
    const Vec ytr = linalg::matvec(y, r, /*trans=*/true);
    const Vec c_ytr = linalg::cholesky_solve(chol_c, ytr);
    const double quad = inv_s2 * r2 - inv_s2 * inv_s2 * linalg::dot(ytr.data(), c_ytr.data(), d);
    const double logdet_d = kk * std::log(obs.sigma2) + linalg::logdet_from_cholesky(chol_s) +
                            linalg::logdet_from_cholesky(chol_c);
    logw[c] = std::log(prior.weights[c]) - 0.5 * logdet_d - 0.5 * quad;
  }

  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logw) mx = std::max(mx, v);
  double sum = 0.0;
  for (int c = 0; c < m; ++c) {
    post.weights[c] = std::exp(logw[c] - mx);
    sum += post.weights[c];
  }
  for (double& w : post.weights) w /= sum;
  return post;
}

PushbackResult pushback_sample(const GaussianMixture& posterior, const nets::BranchParams& branch,
                               int n, std::uint64_t seed) {
  const int m = posterior.components();
  const int d = posterior.dim();
  std::vector<Mat> chols;
  chols.reserve(m);
  for (int c = 0; c < m; ++c) chols.push_back(cholesky_jittered(posterior.covs[c]));

  Vec cumw(m);
  double acc = 0.0;
  for (int c = 0; c < m; ++c) {
    acc += posterior.weights[c];
    cumw[c] = acc;
  }

  PushbackResult res;
  res.u_samples = Mat(n, d);
  Rng rng(seed);
  Vec z(d), b(d);
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform();
    int comp = m - 1;
    for (int c = 0; c < m; ++c)
      if (pick <= cumw[c]) {
        comp = c;
        break;
      }
    for (double& v : z) v = rng.normal();
    const Mat& l = chols[comp];
    for (int a = 0; a < d; ++a)
      b[a] = posterior.means[comp][a] + linalg::dot(l.row(a), z.data(), a + 1);
    const Vec u = nets::branch_inverse(branch, b);
    std::copy(u.begin(), u.end(), res.u_samples.row(i));
  }

  res.mean.assign(d, 0.0);
  res.stddev.assign(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) res.mean[j] += res.u_samples(i, j);
  for (double& v : res.mean) v /= n;
  if (n > 1) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        const double dv = res.u_samples(i, j) - res.mean[j];
        res.stddev[j] += dv * dv;
      }
    for (double& v : res.stddev) v = std::sqrt(v / (n - 1));
  }
  return res;
}

}  // namespace idon::bayes

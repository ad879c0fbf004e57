#include <cmath>
#include <cstdio>
#include <limits>

#include "idon/bayes.hpp"
#include "idon/errors.hpp"

namespace idon::bayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kCovFloor = 1e-8;

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

double log_gaussian_chol(const double* x, const Vec& mean, const Mat& chol) {
  const int d = static_cast<int>(mean.size());
  // Solve L z = (x - mean) forward; quadratic form is |z|^2.
  Vec z(d);
  for (int i = 0; i < d; ++i) {
    double s = x[i] - mean[i];
    for (int k = 0; k < i; ++k) s -= chol(i, k) * z[k];
    z[i] = s / chol(i, i);
  }
  double quad = 0.0, logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    quad += z[i] * z[i];
    logdet += std::log(chol(i, i));
  }
  return -0.5 * (d * kLog2Pi + quad) - logdet;
}

struct EmResult {
  GaussianMixture gmm;
  double loglik = -std::numeric_limits<double>::infinity();
};

EmResult run_em(const Mat& samples, int m, std::uint64_t seed) {
  const int n = samples.rows, d = samples.cols;
  Rng rng(seed);

  // Shared moments for the initial covariances.
  Vec grand_mean(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) grand_mean[j] += samples(i, j);
  for (double& v : grand_mean) v /= n;
  Mat grand_cov(d, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      const double da = samples(i, a) - grand_mean[a];
      for (int b = 0; b <= a; ++b)
        grand_cov(a, b) += da * (samples(i, b) - grand_mean[b]);
    }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b <= a; ++b) {
      grand_cov(a, b) /= n;
      grand_cov(b, a) = grand_cov(a, b);
    }
  for (int a = 0; a < d; ++a) grand_cov(a, a) += kCovFloor;

  // k-means++ seeding of the means.
  EmResult res;
  GaussianMixture& gmm = res.gmm;
  gmm.weights.assign(m, 1.0 / m);
  gmm.covs.assign(m, grand_cov);
  std::vector<int> centers;
  centers.push_back(static_cast<int>(rng.uniform_index(n)));
  Vec d2(n, 0.0);
  for (int c = 1; c < m; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int cc : centers) {
        double dist = 0.0;
        for (int j = 0; j < d; ++j) {
          const double diff = samples(i, j) - samples(cc, j);
          dist += diff * diff;
        }
        best = std::min(best, dist);
      }
      d2[i] = best;
      total += best;
    }
    double pick = rng.uniform() * total;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      pick -= d2[i];
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(chosen);
  }
  for (int c : centers) gmm.means.emplace_back(samples.row(c), samples.row(c) + d);

  Mat resp(n, m);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 500; ++it) {
    // E step.
    std::vector<Mat> chols;
    chols.reserve(m);
    for (int c = 0; c < m; ++c) chols.push_back(cholesky_jittered(gmm.covs[c]));
    double ll = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : ll) if (n * d > 20000)
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < m; ++c) {
        const double lp =
            std::log(gmm.weights[c]) + log_gaussian_chol(samples.row(i), gmm.means[c], chols[c]);
        resp(i, c) = lp;
        mx = std::max(mx, lp);
      }
      double sum = 0.0;
      for (int c = 0; c < m; ++c) sum += std::exp(resp(i, c) - mx);
      const double lse = mx + std::log(sum);
      for (int c = 0; c < m; ++c) resp(i, c) = std::exp(resp(i, c) - lse);
      ll += lse;
    }
    res.loglik = ll;

    // M step.
    for (int c = 0; c < m; ++c) {
      double nk = 0.0;
      for (int i = 0; i < n; ++i) nk += resp(i, c);
      if (nk < 1e-12) continue;  // collapsed; pruned after convergence
      gmm.weights[c] = nk / n;
      Vec mean(d, 0.0);
      for (int i = 0; i < n; ++i) {
        const double r = resp(i, c);
        const double* xi = samples.row(i);
        for (int j = 0; j < d; ++j) mean[j] += r * xi[j];
      }
      for (double& v : mean) v /= nk;
      Mat cov(d, d);
      for (int i = 0; i < n; ++i) {
        const double r = resp(i, c);
        const double* xi = samples.row(i);
        for (int a = 0; a < d; ++a) {
          const double da = r * (xi[a] - mean[a]);
          for (int b = 0; b <= a; ++b) cov(a, b) += da * (xi[b] - mean[b]);
        }
      }
      for (int a = 0; a < d; ++a)
        for (int b = 0; b <= a; ++b) {
          cov(a, b) /= nk;
          cov(b, a) = cov(a, b);
        }
      for (int a = 0; a < d; ++a) cov(a, a) += kCovFloor;
      gmm.means[c] = std::move(mean);
      gmm.covs[c] = std::move(cov);
    }

    if (std::fabs(ll - prev_ll) < 1e-8 * (1.0 + std::fabs(prev_ll))) break;
    prev_ll = ll;
  }
  return res;
}

}  // namespace

GaussianMixture fit_gmm(const Mat& samples, int components, std::uint64_t seed) {
  EmResult best;
  for (int restart = 0; restart < 5; ++restart) {
    EmResult r = run_em(samples, components, Rng::derive(seed, restart));
    if (r.loglik > best.loglik) best = std::move(r);
  }
  GaussianMixture& gmm = best.gmm;

  // Prune collapsed components.
  GaussianMixture pruned;
  for (int c = 0; c < gmm.components(); ++c) {
    if (gmm.weights[c] < 1e-8) {
      std::fprintf(stderr, "fit_gmm: pruning degenerate component %d (weight %.3g)\n", c,
                   gmm.weights[c]);
      continue;
    }
    pruned.weights.push_back(gmm.weights[c]);
    pruned.means.push_back(gmm.means[c]);
    pruned.covs.push_back(gmm.covs[c]);
  }
  double wsum = 0.0;
  for (double w : pruned.weights) wsum += w;
  for (double& w : pruned.weights) w /= wsum;
  return pruned;
}

double log_mixture_density(const GaussianMixture& gmm, const Vec& x) {
  double mx = -std::numeric_limits<double>::infinity();
  Vec lp(gmm.components());
  for (int c = 0; c < gmm.components(); ++c) {
    const Mat chol = cholesky_jittered(gmm.covs[c]);
    lp[c] = std::log(gmm.weights[c]) + log_gaussian_chol(x.data(), gmm.means[c], chol);
    mx = std::max(mx, lp[c]);
  }
  double sum = 0.0;
  for (double v : lp) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

}  // namespace idon::bayes

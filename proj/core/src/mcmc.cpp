#include <cmath>

#include "idon/bayes.hpp"

namespace idon::bayes {

McmcResult pcn_mcmc(const std::function<double(const Vec&)>& log_likelihood,
                    const prob::GpSampler& prior, double beta, int n_samples,
                    std::uint64_t seed) {
  const int d = prior.size();
  const double mean = prior.spec().mean;
  const double contraction = std::sqrt(1.0 - beta * beta);

  Rng rng(seed);
  Vec u = prior.draw(rng);
  double ll = log_likelihood(u);

  McmcResult res;
  res.chain = Mat(n_samples, d);
  long accepted = 0;
  Vec proposal(d);
  for (int s = 0; s < n_samples; ++s) {
    const Vec xi = prior.draw_centered(rng);
    for (int j = 0; j < d; ++j)
      proposal[j] = mean + contraction * (u[j] - mean) + beta * xi[j];
    const double ll_new = log_likelihood(proposal);
    const double log_alpha = ll_new - ll;
    if (log_alpha >= 0.0 || std::log(rng.uniform() + 1e-300) < log_alpha) {
      u = proposal;
      ll = ll_new;
      ++accepted;
    }
    std::copy(u.begin(), u.end(), res.chain.row(s));
  }
  res.acceptance = static_cast<double>(accepted) / n_samples;
  return res;
}

namespace {
double reflect_unit(double x) {
  // Fold into [0,1]; the proposal stays symmetric under this reflection.
  while (x < 0.0 || x > 1.0) {
    if (x < 0.0) x = -x;
    if (x > 1.0) x = 2.0 - x;
  }
  return x;
}
}  // namespace

McmcResult rw_metropolis(const std::function<double(const Vec&)>& log_posterior, double step,
                         int n_samples, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Vec x(dim);
  for (double& v : x) v = rng.uniform();
  double lp = log_posterior(x);

  McmcResult res;
  res.chain = Mat(n_samples, dim);
  long accepted = 0;
  Vec proposal(dim);
  for (int s = 0; s < n_samples; ++s) {
    for (int j = 0; j < dim; ++j) proposal[j] = reflect_unit(x[j] + step * rng.normal());
    const double lp_new = log_posterior(proposal);
    const double log_alpha = lp_new - lp;
    if (log_alpha >= 0.0 || std::log(rng.uniform() + 1e-300) < log_alpha) {
      x = proposal;
      lp = lp_new;
      ++accepted;
    }
    std::copy(x.begin(), x.end(), res.chain.row(s));
  }
  res.acceptance = static_cast<double>(accepted) / n_samples;
  return res;
}

}  // namespace idon::bayes

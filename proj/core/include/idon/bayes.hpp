#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "idon/linalg.hpp"
#include "idon/networks.hpp"
#include "idon/operator.hpp"
#include "idon/problems.hpp"
#include "idon/rng.hpp"

namespace idon::bayes {

/// Mixture of D-dimensional Gaussians; weights sum to 1, covariances SPD.
struct GaussianMixture {
  Vec weights;
  std::vector<Vec> means;
  std::vector<Mat> covs;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

double log_mixture_density(const GaussianMixture& gmm, const Vec& x);

/// Noisy observations s_hat = Y_eff b + sigma eta with eta ~ N(0, I);
/// likelihood N(s_hat | Y b, sigma^2 I) in branch-output space.
struct ObservationModel {
  Vec s_hat;
  double sigma2 = 1.0;
  op::TrunkMatrix ym;
};

using PriorSampler = std::function<Vec(Rng&)>;

/// Ancestral sampling of the pushforward prior: draw u from its prior and
/// take b = branch_forward(u). Rows of the result are b samples.
Mat pushforward_samples(const nets::BranchParams& branch, const PriorSampler& prior_u, int n,
                        std::uint64_t seed);

/// Full-covariance EM from a k-means++ seeding, diagonal floor 1e-8,
/// stopping at relative log-likelihood change < 1e-8 or 500 iterations;
/// returns the best of 5 seeded restarts. Components whose weight collapses
/// below 1e-8 are pruned with a warning.
GaussianMixture fit_gmm(const Mat& samples, int components, std::uint64_t seed);

/// Conjugate update of a Gaussian-mixture prior on b against the linear-
/// Gaussian likelihood:
///   C_m^{-1} = sigma^-2 Y^T Y + S_m^{-1}
///   C_m^{-1} mu_m = sigma^-2 Y^T s_hat + S_m^{-1} m_m
///   w~_m  propto  w_m |D_m|^{-1/2} exp(-1/2 (s_hat - Y m_m)^T D_m^{-1} (s_hat - Y m_m)),
///   D_m = sigma^2 I + Y S_m Y^T.
/// Weights are normalized in log space; the K x K forms are evaluated through
/// their D x D Woodbury equivalents (identical values, no K x K factorization).
GaussianMixture posterior_update(const GaussianMixture& prior, const ObservationModel& obs);

struct PushbackResult {
  Mat u_samples;  // n x D
  Vec mean;
  Vec stddev;  // per coordinate, unbiased
};

/// Ancestral draw from the posterior mixture followed by the inverse branch
/// map; summary statistics are over the u samples.
PushbackResult pushback_sample(const GaussianMixture& posterior, const nets::BranchParams& branch,
                               int n, std::uint64_t seed);

struct McmcResult {
  Mat chain;  // n x dim, includes the initial state's successors only
  double acceptance = 0.0;
};

/// Preconditioned Crank-Nicolson over a Gaussian prior: proposals
/// u' = mean + sqrt(1 - beta^2)(u - mean) + beta xi with xi a centered prior
/// draw, accepted with min(1, exp(ll(u') - ll(u))). Prior-reversible, so a
/// flat likelihood reproduces the prior.
McmcResult pcn_mcmc(const std::function<double(const Vec&)>& log_likelihood,
                    const prob::GpSampler& prior, double beta, int n_samples,
                    std::uint64_t seed);

/// Random-walk Metropolis on [0,1]^dim with Gaussian steps reflected at the
/// bounds (symmetric proposal).
McmcResult rw_metropolis(const std::function<double(const Vec&)>& log_posterior, double step,
                         int n_samples, int dim, std::uint64_t seed);

}  // namespace idon::bayes

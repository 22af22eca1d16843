// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "emoe/priors.hpp"
#include "emoe/rng.hpp"
#include "emoe/sampler.hpp"
#include "emoe/types.hpp"

namespace emoe {

// Monte Carlo handle on the fresh-expert output law: the average of
// N(beta0, sigma2 + sf2) over parameter draws. Independent of x under the
// stationary kernel, so it is shared by every prediction point.
struct PriorOutputMix {
  std::vector<double> mean, var;
  double mu_beta = 0.0;  // exact prior mean, used for point predictions

  double density(double y) const;
  double cdf(double y) const;
};

PriorOutputMix make_prior_output_mix(const PriorConfig& priors, int samples, Rng& rng,
                                     bool sigma2_fixed = false);
PriorOutputMix prior_mix_from_params(const std::vector<ExpertParams>& ps, double mu_beta);

// One Gaussian component of the posterior predictive mixture.
struct MixtureComponent {
  double w = 0.0, mean = 0.0, var = 1.0;
};

// Posterior predictive law at one input point, averaged over draws:
// data-backed Gaussian components plus a fresh-expert slice of weight
// fresh_w carried by a shared PriorOutputMix (not owned).
struct PredictiveDist {
  std::vector<MixtureComponent> comp;
  double fresh_w = 0.0;
  const PriorOutputMix* fresh = nullptr;

  double mean() const;
  double density(double y) const;
  double cdf(double y) const;
  // P(y = l) for l = 0..levels under the ordinal probit cutoffs
  std::vector<double> ordinal_probs(const std::vector<double>& cutoffs, int levels) const;
  // highest-density region of the given mass: union of disjoint intervals,
  // located by thresholding the density on a grid over [lo, hi]
  std::vector<std::pair<double, double>> hpd(double mass, double lo, double hi,
                                             int grid_points = 2001) const;
  // central credible set of ordinal levels [l_lo, l_hi]
  std::pair<int, int> ordinal_central(const std::vector<double>& cutoffs, int levels,
                                      double mass) const;
};

struct PredictOptions {
  int completions = 200;  // draws used to fill in unobserved input dimensions
  std::uint64_t seed = 97;
};

// Predictive distributions at the rows of Xstar given posterior draws.
// Unobserved input dimensions are flagged with NaN and handled by Monte
// Carlo completion from the per-component input predictive. The returned
// dists reference `fresh`, which must outlive them.
std::vector<PredictiveDist> predict_batch(const Dataset& data,
                                          const std::vector<SamplerState>& states,
                                          bool dp_mode, const Eigen::MatrixXd& Xstar,
                                          const PriorOutputMix& fresh,
                                          const PredictOptions& opts);

}  // namespace emoe

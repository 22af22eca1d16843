// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>

#include "emoe/rng.hpp"
#include "emoe/types.hpp"

namespace emoe {

double scalar_prior_logpdf(const ScalarPrior& pr, double x);
double sample_scalar_prior(const ScalarPrior& pr, Rng& rng);

// unconstrained coordinates eta = (log sigma2, beta0, log sf2, log ell_1..D)
Eigen::VectorXd expert_to_eta(const ExpertParams& p);
ExpertParams expert_from_eta(const Eigen::VectorXd& eta, int D);

// prior log density of the expert in eta space (log-transform Jacobians
// included); sigma2_fixed drops the sigma2 coordinate (Bernoulli probit)
double expert_prior_logpdf_eta(const PriorConfig& cfg, const ExpertParams& p,
                               bool sigma2_fixed);
Eigen::VectorXd expert_prior_grad_eta(const PriorConfig& cfg, const ExpertParams& p,
                                      bool sigma2_fixed);

ExpertParams sample_expert_prior(const PriorConfig& cfg, int D, Rng& rng,
                                 bool sigma2_fixed);

}  // namespace emoe

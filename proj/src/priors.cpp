// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/priors.hpp"

#include <cmath>

#include "emoe/math.hpp"

namespace emoe {

using Eigen::VectorXd;
using Kind = ScalarPrior::Kind;

double scalar_prior_logpdf(const ScalarPrior& pr, double x) {
  switch (pr.kind) {
    case Kind::LogNormal: {
      if (!(x > 0)) return kNegInf;
      double t = std::log(x);
      return -t - std::log(pr.p2) - 0.5 * kLog2Pi -
             0.5 * (t - pr.p1) * (t - pr.p1) / (pr.p2 * pr.p2);
    }
    case Kind::Gamma:
      if (!(x > 0)) return kNegInf;
      return pr.p1 * std::log(pr.p2) - std::lgamma(pr.p1) +
             (pr.p1 - 1.0) * std::log(x) - pr.p2 * x;
    case Kind::Normal:
      return log_normal_pdf(x, pr.p1, pr.p2 * pr.p2);
  }
  return kNegInf;
}

double sample_scalar_prior(const ScalarPrior& pr, Rng& rng) {
  switch (pr.kind) {
    case Kind::LogNormal:
      return std::exp(rng.normal(pr.p1, pr.p2));
    case Kind::Gamma:
      return rng.gamma(pr.p1, pr.p2);
    case Kind::Normal:
      return rng.normal(pr.p1, pr.p2);
  }
  return 0.0;
}

namespace {
// log density in t = log(theta), Jacobian included, and its t-derivative
double logpdf_logspace(const ScalarPrior& pr, double t) {
  if (pr.kind == Kind::Gamma)
    return pr.p1 * std::log(pr.p2) - std::lgamma(pr.p1) + pr.p1 * t -
           pr.p2 * std::exp(t);
  // LogNormal: plain Gaussian in t
  return -std::log(pr.p2) - 0.5 * kLog2Pi -
         0.5 * (t - pr.p1) * (t - pr.p1) / (pr.p2 * pr.p2);
}

double grad_logspace(const ScalarPrior& pr, double t) {
  if (pr.kind == Kind::Gamma) return pr.p1 - pr.p2 * std::exp(t);
  return -(t - pr.p1) / (pr.p2 * pr.p2);
}
}  // namespace

VectorXd expert_to_eta(const ExpertParams& p) {
  const int D = static_cast<int>(p.ell.size());
  VectorXd eta(3 + D);
  eta[0] = std::log(p.sigma2);
  eta[1] = p.beta0;
  eta[2] = std::log(p.sf2);
  for (int d = 0; d < D; ++d) eta[3 + d] = std::log(p.ell[d]);
  return eta;
}

ExpertParams expert_from_eta(const VectorXd& eta, int D) {
  ExpertParams p;
  p.sigma2 = std::exp(eta[0]);
  p.beta0 = eta[1];
  p.sf2 = std::exp(eta[2]);
  p.ell.resize(D);
  for (int d = 0; d < D; ++d) p.ell[d] = std::exp(eta[3 + d]);
  return p;
}

double expert_prior_logpdf_eta(const PriorConfig& cfg, const ExpertParams& p,
                               bool sigma2_fixed) {
  double acc = 0.0;
  if (!sigma2_fixed) acc += logpdf_logspace(cfg.sigma2, std::log(p.sigma2));
  acc += log_normal_pdf(p.beta0, cfg.beta0.p1, cfg.beta0.p2 * cfg.beta0.p2);
  acc += logpdf_logspace(cfg.magnitude, std::log(p.sf2));
  for (size_t d = 0; d < cfg.lengthscale.size(); ++d)
    acc += logpdf_logspace(cfg.lengthscale[d], std::log(p.ell[d]));
  return acc;
}

VectorXd expert_prior_grad_eta(const PriorConfig& cfg, const ExpertParams& p,
                               bool sigma2_fixed) {
  const int D = static_cast<int>(p.ell.size());
  VectorXd g = VectorXd::Zero(3 + D);
  if (!sigma2_fixed) g[0] = grad_logspace(cfg.sigma2, std::log(p.sigma2));
  g[1] = -(p.beta0 - cfg.beta0.p1) / (cfg.beta0.p2 * cfg.beta0.p2);
  g[2] = grad_logspace(cfg.magnitude, std::log(p.sf2));
  for (int d = 0; d < D; ++d)
    g[3 + d] = grad_logspace(cfg.lengthscale[d], std::log(p.ell[d]));
  return g;
}

ExpertParams sample_expert_prior(const PriorConfig& cfg, int D, Rng& rng,
                                 bool sigma2_fixed) {
  ExpertParams p;
  p.sigma2 = sigma2_fixed ? 1.0 : sample_scalar_prior(cfg.sigma2, rng);
  p.beta0 = sample_scalar_prior(cfg.beta0, rng);
  p.sf2 = sample_scalar_prior(cfg.magnitude, rng);
  p.ell.resize(D);
  for (int d = 0; d < D; ++d) p.ell[d] = sample_scalar_prior(cfg.lengthscale[d], rng);
  return p;
}

}  // namespace emoe

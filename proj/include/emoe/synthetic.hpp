// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <vector>

#include "emoe/rng.hpp"
#include "emoe/types.hpp"

namespace emoe {

// Mixture-of-two-damped-cosines benchmark. Output depends on the first
// input only; extra dimensions are correlated noise inputs.
struct DampedCosineConfig {
  int n = 200;
  int dim = 1;
  std::uint64_t seed = 1;
  double beta10 = 0.1, beta11 = 0.6;    // component 1: exp(b0 x) cos(b1 pi x)
  double beta20 = -0.1, beta21 = 0.4;   // component 2
  double sigma1 = 0.15, sigma2 = 0.05;
  double tau1 = 0.8, tau2 = 0.8;
  double mu1 = 3.0, mu2 = 5.0;
  double input_mean = 4.0;
  double input_var = 4.0;
  double input_cov = 3.5;  // between dimensions > 1

  void validate() const;
  double component1_weight(double x1) const;
  double component_mean(int comp, double x1) const;
  // true conditional density p(y | x1) and mean
  double density(double y, double x1) const;
  double mean(double x1) const;
};

struct SyntheticData {
  Dataset data;
  std::vector<int> component;  // generating component per row (1 or 2)
};

// Draws x ~ N(mu, Sigma), a component from the tau-weighted bumps at mu1 and
// mu2, then y from the chosen damped cosine. Input specs are NIG with
// u0 = column mean of the generated inputs, c = 1/4, a = 2, b = 1.
SyntheticData generate_damped_cosine(const DampedCosineConfig& cfg);

// Ordinal codes from continuous outputs: level l such that y falls in
// (eps_{l-1}, eps_l], with the open ends below eps_0 and above eps_{L-1}.
int discretize_output(double y, const std::vector<double>& cutoffs);

// NIG specs with u0 matched to the column means of x (c=1/4, a=2, b=1)
std::vector<InputFamilySpec> default_input_specs(const Eigen::MatrixXd& x);

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace emoe {

enum class OutputKind { Gaussian, OrdinalProbit };

// Conjugate family for one input dimension.
struct InputFamilySpec {
  enum class Family { GaussianNig, CategoricalDirichlet, BinomialBeta };
  Family family = Family::GaussianNig;

  // GaussianNig: normal-inverse-gamma (u0, c, a, b); b is a rate.
  double u0 = 0.0, c = 0.25, a = 2.0, b = 1.0;

  // CategoricalDirichlet: one concentration per category 0..G.
  std::vector<double> gamma;

  // BinomialBeta: x in {0..trials}, Beta(g0, g1) on the success probability.
  int trials = 1;
  double g0 = 1.0, g1 = 1.0;

  int categories() const { return static_cast<int>(gamma.size()); }
  void validate() const;
};

struct Dataset {
  Eigen::MatrixXd x;  // N x D
  Eigen::VectorXd y;  // N; for ordinal output, integer codes 0..L
  OutputKind output = OutputKind::Gaussian;
  int ordinal_levels = 0;        // L (categories 0..L)
  std::vector<double> cutoffs;   // eps_0..eps_{L-1}; eps_0 = 0
  std::vector<InputFamilySpec> input_spec;  // size D

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  void validate() const;
};

// Nested two-level allocation: y-cluster label zy[n], x-cluster label zx[n]
// within that y-cluster. Labels are canonical (order of first appearance)
// after recount().
struct NestedPartition {
  std::vector<int> zy, zx;

  // derived counts, valid after recount()
  int k = 0;
  std::vector<int> nj;                 // y-cluster sizes
  std::vector<int> kj;                 // x-clusters per y-cluster
  std::vector<std::vector<int>> nlj;   // x-cluster sizes per y-cluster

  int n() const { return static_cast<int>(zy.size()); }

  // Relabels both levels to order-of-appearance form and refreshes counts.
  // Returns, for each new y label, the old y label it came from.
  std::vector<int> recount();

  // number of x-clusters that sit inside y-clusters with more than one
  // x-cluster; number of y-clusters with a single x-cluster; number of
  // x-clusters with more than one member
  int kx2plus() const;
  int kx1() const;
  int kx1plus() const;

  std::string key() const;  // canonical string form, for counting/tests
};

// GP expert hyperparameters: noise variance, constant mean, ARD kernel
// magnitude and per-dimension length-scales.
struct ExpertParams {
  double sigma2 = 1.0;
  double beta0 = 0.0;
  double sf2 = 1.0;
  Eigen::VectorXd ell;
};

struct ConcentrationParams {
  double alpha_theta = 1.0;
  std::vector<double> alpha_psi;  // one per y-cluster
};

struct ScalarPrior {
  enum class Kind { LogNormal, Gamma, Normal };
  Kind kind = Kind::Gamma;
  double p1 = 1.0, p2 = 1.0;  // LogNormal: (mu of log, sd of log);
                              // Gamma: (shape, rate); Normal: (mean, sd)
  void validate() const;
};

struct PriorConfig {
  ScalarPrior sigma2{ScalarPrior::Kind::LogNormal, std::log(0.01), 0.5};
  ScalarPrior beta0{ScalarPrior::Kind::Normal, 0.0, 0.5};
  ScalarPrior magnitude{ScalarPrior::Kind::Gamma, 2.0, 1.5};
  std::vector<ScalarPrior> lengthscale;  // per input dimension
  double u_theta = 1.0, v_theta = 1.0;   // Gamma(shape, rate) on alpha_theta
  double u_psi = 1.0, v_psi = 1.0;       // Gamma(shape, rate) on alpha_psi_j

  // fills lengthscale with the defaults for dimension count d:
  // Gamma(3,1) on dim 0 and Gamma(10,1/2) on the rest
  void default_lengthscales(int d);
  void validate(int d) const;
};

struct SamplerState {
  NestedPartition part;
  std::vector<ExpertParams> experts;   // aligned with y-cluster labels
  ConcentrationParams conc;
  Eigen::VectorXd latent;              // \tilde y; equals y when Gaussian
};

void validate_state(const SamplerState& s, const Dataset& data);

}  // namespace emoe

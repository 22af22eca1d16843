// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include "emoe/rng.hpp"
#include "emoe/types.hpp"

namespace emoe {

// Sufficient statistics for one input dimension of one x-cluster.
struct DimStats {
  int n = 0;
  double sx = 0.0, sxx = 0.0;       // GaussianNig
  std::vector<double> counts;       // CategoricalDirichlet
  double ssum = 0.0;                // BinomialBeta: total successes
  double lchoose_sum = 0.0;         // BinomialBeta: sum log C(G, x_i)
};

// All dimensions of one x-cluster.
struct XStats {
  int n = 0;
  std::vector<DimStats> dims;

  void init(const Dataset& data);
  void add(const Dataset& data, int row);
  void remove(const Dataset& data, int row);
  void merge(const XStats& other);  // pool the statistics of two clusters
};

// All quantities are logs. "marginal" is h(x) under the prior, "predictive"
// is h(x | X) given a cluster's statistics, "joint" is h(X), the full
// conjugate evidence of the member set.
double log_marginal_dim(const InputFamilySpec& spec, double x);
double log_predictive_dim(const InputFamilySpec& spec, const DimStats& s, double x);
double log_joint_dim(const InputFamilySpec& spec, const DimStats& s);

// products over the D independent dimensions
double log_marginal_row(const Dataset& data, int row);
double log_predictive_row(const Dataset& data, const XStats& s, int row);
double log_joint_x(const Dataset& data, const XStats& s);

// draws for Monte Carlo completion of unobserved dimensions
double sample_marginal_dim(const InputFamilySpec& spec, Rng& rng);
double sample_predictive_dim(const InputFamilySpec& spec, const DimStats& s, Rng& rng);

}  // namespace emoe

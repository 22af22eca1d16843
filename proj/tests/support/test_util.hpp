// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "emoe/synthetic.hpp"
#include "emoe/types.hpp"

namespace testutil {

// two-sided Kolmogorov-Smirnov statistic of draws against a continuous cdf
inline double ks_stat(std::vector<double> draws,
                      const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (size_t i = 0; i < draws.size(); ++i) {
    double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - (static_cast<double>(i) + 1.0) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

inline emoe::Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  emoe::Dataset d;
  d.x = X;
  d.y = y;
  d.input_spec = emoe::default_input_specs(X);
  return d;
}

}  // namespace testutil

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emoe/types.hpp"

namespace emoe {

// Variation of information between two partitions given as label vectors,
// in nats: H(a) + H(b) - 2 I(a,b).
double vi_distance(const std::vector<int>& a, const std::vector<int>& b);

// Fraction of draws in which each pair shares a y-cluster.
Eigen::MatrixXd psm_y(const std::vector<SamplerState>& draws);

// Fraction of draws in which each pair of `members` shares both the
// y-cluster and the nested x-cluster.
Eigen::MatrixXd psm_x_within(const std::vector<SamplerState>& draws,
                             const std::vector<int>& members);

struct PartitionEstimate {
  std::vector<int> zy;   // estimated y-partition, canonical labels
  std::vector<int> zx;   // nested x labels within each estimated y-cluster
  int k = 0;
  std::vector<int> kj;   // x-cluster count inside each estimated y-cluster
  double avg_vi = 0.0;   // posterior expected VI of the y-level estimate
  double ball_size = 0.0;  // max VI among the 95% of draws closest to it
};

// Minimiser of the posterior expected VI, searched over the sampled
// partitions: y-level first, then the nested x-partition within each
// estimated y-cluster (searched over the induced sampled partitions of its
// members). `greedy_refine` adds single-point improvement sweeps.
PartitionEstimate vi_point_estimate(const std::vector<SamplerState>& draws,
                                    bool greedy_refine = false);

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace emoe {

// Thin wrapper over mt19937_64 with hand-rolled variate transforms so that a
// fixed seed reproduces the exact same stream on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  // uniform on (0,1), never returns the endpoints
  double uniform();
  double uniform(double lo, double hi);
  // integer in [0, n)
  int uniform_int(int n);

  double normal();
  double normal(double mean, double sd);
  // shape/rate parameterisation
  double gamma(double shape, double rate);
  double beta(double a, double b);
  double student_t(double df);
  int binomial(int n, double p);
  int poisson_small(double lambda);

  // index draw from unnormalised log weights (log-sum-exp normalised)
  int categorical_log(const std::vector<double>& logw);

  // standard normal truncated to [lo, hi] (either side may be infinite)
  double truncated_std_normal(double lo, double hi);

  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace emoe

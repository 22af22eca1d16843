// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/rng.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "emoe/math.hpp"

namespace emoe {

double Rng::uniform() {
  // 53-bit mantissa; shift into (0,1) by offsetting half an ulp
  const double scale = 1.0 / 9007199254740992.0;  // 2^-53
  std::uint64_t bits = gen_() >> 11;
  return (static_cast<double>(bits) + 0.5) * scale;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  assert(n > 0);
  // rejection to avoid modulo bias
  std::uint64_t un = static_cast<std::uint64_t>(n);
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

double Rng::gamma(double shape, double rate) {
  assert(shape > 0 && rate > 0);
  // Marsaglia & Tsang (2000); shape < 1 via the boost trick
  if (shape < 1.0) {
    double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a, 1.0);
  double y = gamma(b, 1.0);
  return x / (x + y);
}

double Rng::student_t(double df) {
  double z = normal();
  double g = gamma(0.5 * df, 0.5);  // chi^2_df
  return z / std::sqrt(g / df);
}

int Rng::binomial(int n, double p) {
  assert(n >= 0 && p >= 0.0 && p <= 1.0);
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (uniform() < p) ++k;
  return k;
}

int Rng::poisson_small(double lambda) {
  double limit = std::exp(-lambda), prod = uniform();
  int k = 0;
  while (prod > limit) {
    prod *= uniform();
    ++k;
  }
  return k;
}

int Rng::categorical_log(const std::vector<double>& logw) {
  assert(!logw.empty());
  double z = log_sum_exp(logw);
  if (!std::isfinite(z)) throw std::runtime_error("categorical_log: no finite weight");
  double u = uniform(), acc = 0.0;
  for (size_t i = 0; i < logw.size(); ++i) {
    acc += std::exp(logw[i] - z);
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(logw.size()) - 1;  // guard against rounding
}

double Rng::truncated_std_normal(double lo, double hi) {
  assert(lo < hi);
  // one-sided far tails: Robert (1995) exponential rejection, otherwise CDF
  // inversion, which is exact and cheap in the bulk.
  const double tail = 8.0;
  if (lo > tail && !std::isfinite(hi)) {
    for (;;) {
      double a = lo;
      double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
      double e = -std::log(uniform()) / alpha;  // Exp(alpha)
      double x = a + e;
      double rho = std::exp(-0.5 * (x - alpha) * (x - alpha));
      if (uniform() <= rho) return x;
    }
  }
  if (hi < -tail && !std::isfinite(lo)) return -truncated_std_normal(-hi, -lo);
  double plo = norm_cdf(lo), phi = norm_cdf(hi);
  if (phi - plo < 1e-300) {
    // interval mass underflows; both bounds in the same far tail
    if (lo >= 0.0) return lo;  // lowest-density-gradient end
    return hi;
  }
  double u = uniform(plo, phi);
  return norm_quantile(u);
}

}  // namespace emoe

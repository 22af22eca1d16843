// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "emoe/math.hpp"
#include "emoe/sampler.hpp"
#include "emoe/synthetic.hpp"
#include "test_util.hpp"

using namespace emoe;

namespace {

// Quadrature moments of the concentration conditional
//   p(alpha | k, N) propto Gamma(alpha | u, v) alpha^{k-1} (alpha + N)
//                          Gamma(alpha+1) / Gamma(alpha+1+N),
// the marginal of the auxiliary-variable scheme's joint target.
void ew_conditional_moments(double u, double v, int k, int N, double* mean,
                            double* var) {
  auto logq = [&](double t) {
    double a = std::exp(t);
    return u * t - v * a + (k - 1.0) * t + std::log(a + N) +
           std::lgamma(a + 1.0) - std::lgamma(a + 1.0 + N);
  };
  double peak = logq(0.0);
  for (double t = -10.0; t <= 8.0; t += 0.05) peak = std::max(peak, logq(t));
  auto mom = [&](int p) {
    return integrate([&](double t) { return std::exp(logq(t) - peak + p * t); },
                     -30.0, 10.0, 1e-12);
  };
  double z = mom(0), m1 = mom(1), m2 = mom(2);
  *mean = m1 / z;
  *var = m2 / z - (m1 / z) * (m1 / z);
}

}  // namespace

TEST_CASE("iterated concentration updates reach the analytic conditional") {
  // fixed nested partition: cluster 0 has 8 members in 3 x-clusters,
  // cluster 1 has 4 members in 2 x-clusters; alpha_theta sees (k=2, N=12)
  SyntheticData sim = generate_damped_cosine(DampedCosineConfig{12, 1, 3});
  PriorConfig priors;
  priors.default_lengthscales(1);
  SamplerOptions opts;
  opts.seed = 19;
  EdpSampler s(sim.data, priors, opts);

  SamplerState st;
  st.part.zy = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
  st.part.zx = {0, 0, 0, 1, 1, 1, 2, 2, 0, 0, 1, 1};
  ExpertParams e;
  e.sigma2 = 0.5;
  e.beta0 = 0.0;
  e.sf2 = 1.0;
  e.ell = Eigen::VectorXd::Ones(1);
  st.experts = {e, e};
  st.conc.alpha_theta = 1.0;
  st.conc.alpha_psi = {1.0, 1.0};
  s.set_state(st);

  const int burn = 200, iters = 30000;
  for (int it = 0; it < burn; ++it) s.update_concentrations();
  double sa = 0.0, sa2 = 0.0, sp = 0.0, sp2 = 0.0;
  for (int it = 0; it < iters; ++it) {
    s.update_concentrations();
    SamplerState cur = s.state();
    double a = cur.conc.alpha_theta;
    double p = cur.conc.alpha_psi[0];
    sa += a;
    sa2 += a * a;
    sp += p;
    sp2 += p * p;
  }
  double ma = sa / iters, va = sa2 / iters - ma * ma;
  double mp = sp / iters, vp = sp2 / iters - mp * mp;

  double mean_t, var_t;
  ew_conditional_moments(priors.u_theta, priors.v_theta, 2, 12, &mean_t, &var_t);
  CHECK(ma == doctest::Approx(mean_t).epsilon(0.05));
  CHECK(va == doctest::Approx(var_t).epsilon(0.12));

  double mean_p, var_p;  // cluster 0: N_0 = 8, k_0 = 3
  ew_conditional_moments(priors.u_psi, priors.v_psi, 3, 8, &mean_p, &var_p);
  CHECK(mp == doctest::Approx(mean_p).epsilon(0.05));
  CHECK(vp == doctest::Approx(var_p).epsilon(0.12));
}

TEST_CASE("frozen concentrations stay put") {
  SyntheticData sim = generate_damped_cosine(DampedCosineConfig{10, 1, 5});
  PriorConfig priors;
  priors.default_lengthscales(1);
  SamplerOptions opts;
  EdpSampler s(sim.data, priors, opts);
  s.freeze_concentrations(0.7, 1.3);
  s.init_from_prior();
  for (int it = 0; it < 20; ++it) s.update_concentrations();
  SamplerState st = s.state();
  CHECK(st.conc.alpha_theta == doctest::Approx(0.7));
  for (double a : st.conc.alpha_psi) CHECK(a == doctest::Approx(1.3));
}

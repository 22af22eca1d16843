// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "emoe/math.hpp"
#include "emoe/sampler.hpp"
#include "test_util.hpp"

using namespace emoe;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

Dataset ordinal_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& codes,
                     int levels, std::vector<double> cutoffs) {
  Dataset d = testutil::make_dataset(X, codes);
  d.output = OutputKind::OrdinalProbit;
  d.ordinal_levels = levels;
  d.cutoffs = std::move(cutoffs);
  return d;
}

}  // namespace

TEST_CASE("single-site latent update samples the exact truncated normal") {
  // one observation with category 1 of {0,1,2}: latent lives in (0, 1]
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  Eigen::VectorXd y(1);
  y << 1;
  Dataset data = ordinal_data(X, y, 2, {0.0, 1.0});
  PriorConfig priors;
  priors.default_lengthscales(1);
  SamplerOptions opts;
  opts.seed = 41;
  EdpSampler s(data, priors, opts);

  SamplerState st;
  st.part.zy = {0};
  st.part.zx = {0};
  ExpertParams e;
  e.sigma2 = 0.5;
  e.beta0 = 0.3;
  e.sf2 = 1.0;
  e.ell = Eigen::VectorXd::Ones(1);
  st.experts = {e};
  st.conc.alpha_psi = {1.0};
  s.set_state(st);

  // latent | y ~ N(0.3, 1.5) truncated to (0, 1]
  const double m = 0.3, sd = std::sqrt(1.5);
  const double a = (0.0 - m) / sd, b = (1.0 - m) / sd;
  const double Z = norm_cdf(b) - norm_cdf(a);

  const int n = 100000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) {
    s.update_latent_outputs();
    draws[i] = s.state().latent[0];
    CHECK(draws[i] > 0.0);
    CHECK(draws[i] <= 1.0);
  }
  double ks = testutil::ks_stat(
      draws, [&](double x) { return (norm_cdf((x - m) / sd) - norm_cdf(a)) / Z; });
  CHECK(ks < 0.01);

  double mean_t = m + sd * (phi(a) - phi(b)) / Z;
  double var_t =
      sd * sd *
      (1.0 + (a * phi(a) - b * phi(b)) / Z - std::pow((phi(a) - phi(b)) / Z, 2));
  double sm = 0.0, sv = 0.0;
  for (double d : draws) sm += d;
  sm /= n;
  for (double d : draws) sv += (d - sm) * (d - sm);
  sv /= n - 1;
  CHECK(sm == doctest::Approx(mean_t).epsilon(0.01));
  CHECK(sv == doctest::Approx(var_t).epsilon(0.03));
}

TEST_CASE("coupled latent coordinates match the quadrant-truncated law") {
  // binary outputs pin the noise scale at one; two correlated points
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 0.8;
  Eigen::VectorXd y(2);
  y << 0, 1;  // latent1 <= 0 < latent2
  Dataset data = ordinal_data(X, y, 1, {0.0});
  PriorConfig priors;
  priors.default_lengthscales(1);
  SamplerOptions opts;
  opts.seed = 43;
  EdpSampler s(data, priors, opts);

  SamplerState st;
  st.part.zy = {0, 0};
  st.part.zx = {0, 0};
  ExpertParams e;
  e.sigma2 = 1.0;  // Bernoulli probit fixes the noise scale
  e.beta0 = 0.2;
  e.sf2 = 1.2;
  e.ell = Eigen::VectorXd::Ones(1);
  st.experts = {e};
  st.conc.alpha_psi = {1.0};
  s.set_state(st);

  // joint latent law: N(beta0 1, A) restricted to t1 <= 0 < t2
  const double k12 = 1.2 * std::exp(-0.5 * 0.64);
  Eigen::Matrix2d A;
  A << 2.2, k12, k12, 2.2;
  const double det = A.determinant();
  auto dens = [&](double t1, double t2) {
    double r1 = t1 - 0.2, r2 = t2 - 0.2;
    double q = (r1 * r1 * A(1, 1) + r2 * r2 * A(0, 0) - 2.0 * r1 * r2 * A(0, 1)) / det;
    return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
  };
  const double lo1 = 0.2 - 9.0 * std::sqrt(2.2), hi2 = 0.2 + 9.0 * std::sqrt(2.2);
  auto moment = [&](int p1, int p2) {
    return integrate(
        [&](double t1) {
          return integrate(
              [&](double t2) {
                return std::pow(t1, p1) * std::pow(t2, p2) * dens(t1, t2);
              },
              0.0, hi2, 1e-9);
        },
        lo1, 0.0, 1e-9);
  };
  double mass = moment(0, 0);
  double m1 = moment(1, 0) / mass, m2 = moment(0, 1) / mass;
  double v1 = moment(2, 0) / mass - m1 * m1;
  double v2 = moment(0, 2) / mass - m2 * m2;
  double c12 = moment(1, 1) / mass - m1 * m2;

  const int burn = 300, n = 40000;
  for (int i = 0; i < burn; ++i) s.update_latent_outputs();
  double s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
  for (int i = 0; i < n; ++i) {
    s.update_latent_outputs();
    Eigen::VectorXd lat = s.state().latent;
    CHECK(lat[0] <= 0.0);
    CHECK(lat[1] >= 0.0);
    s1 += lat[0];
    s2 += lat[1];
    s11 += lat[0] * lat[0];
    s22 += lat[1] * lat[1];
    s12 += lat[0] * lat[1];
  }
  double e1 = s1 / n, e2 = s2 / n;
  CHECK(std::abs(e1 - m1) < 0.04);
  CHECK(std::abs(e2 - m2) < 0.04);
  CHECK(std::abs(s11 / n - e1 * e1 - v1) < 0.06);
  CHECK(std::abs(s22 / n - e2 * e2 - v2) < 0.06);
  CHECK(std::abs(s12 / n - e1 * e2 - c12) < 0.05);
}

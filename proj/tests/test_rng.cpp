// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "emoe/math.hpp"
#include "emoe/rng.hpp"
#include "test_util.hpp"

using namespace emoe;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void moments(const std::vector<double>& v, double* mean, double* var) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  *mean = m;
  *var = s / static_cast<double>(v.size() - 1);
}
}  // namespace

TEST_CASE("fixed seed reproduces the stream across variate types") {
  Rng a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(2.3, 1.1) == b.gamma(2.3, 1.1));
    CHECK(a.beta(0.7, 2.0) == b.beta(0.7, 2.0));
    CHECK(a.uniform_int(17) == b.uniform_int(17));
    CHECK(a.truncated_std_normal(-0.5, 2.0) == b.truncated_std_normal(-0.5, 2.0));
  }
  Rng c(43);
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 50; ++i) differs |= (a2.uniform() != c.uniform());
  CHECK(differs);
}

TEST_CASE("sample moments match the named distributions") {
  Rng rng(7);
  const int n = 100000;
  std::vector<double> u(n), z(n), g(n), be(n), t(n);
  for (int i = 0; i < n; ++i) {
    u[i] = rng.uniform();
    z[i] = rng.normal();
    g[i] = rng.gamma(3.0, 2.0);
    be[i] = rng.beta(2.0, 5.0);
    t[i] = rng.student_t(7.0);
  }
  double m, v;
  moments(u, &m, &v);
  CHECK(m == doctest::Approx(0.5).epsilon(0.01));
  CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(0.03));
  moments(z, &m, &v);
  CHECK(m == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
  CHECK(v == doctest::Approx(1.0).epsilon(0.03));
  moments(g, &m, &v);  // shape/rate: mean 1.5, var 0.75
  CHECK(m == doctest::Approx(1.5).epsilon(0.02));
  CHECK(v == doctest::Approx(0.75).epsilon(0.05));
  moments(be, &m, &v);  // mean 2/7, var 10/392
  CHECK(m == doctest::Approx(2.0 / 7.0).epsilon(0.02));
  CHECK(v == doctest::Approx(10.0 / 392.0).epsilon(0.05));
  moments(t, &m, &v);  // var df/(df-2) = 1.4
  CHECK(m == doctest::Approx(0.0).scale(1.0).epsilon(0.03));
  CHECK(v == doctest::Approx(1.4).epsilon(0.08));
}

TEST_CASE("gamma sampling covers small shapes") {
  Rng rng(11);
  const int n = 100000;
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = rng.gamma(0.4, 1.5);
  double m, v;
  moments(g, &m, &v);
  CHECK(m == doctest::Approx(0.4 / 1.5).epsilon(0.03));
  CHECK(v == doctest::Approx(0.4 / 2.25).epsilon(0.06));
  for (double x : g) CHECK(x > 0.0);
}

TEST_CASE("discrete variates") {
  Rng rng(5);
  const int n = 50000;
  double sb = 0.0, sp = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    int b = rng.binomial(20, 0.3);
    CHECK(b >= 0);
    CHECK(b <= 20);
    sb += b;
    sbb += b * b;
    sp += rng.poisson_small(3.2);
  }
  double mb = sb / n;
  CHECK(mb == doctest::Approx(6.0).epsilon(0.02));
  CHECK(sbb / n - mb * mb == doctest::Approx(4.2).epsilon(0.06));
  CHECK(sp / n == doctest::Approx(3.2).epsilon(0.03));
}

TEST_CASE("categorical from log weights, including impossible entries") {
  Rng rng(13);
  // shifted log weights for (0.2, 0.3, 0.5)
  std::vector<double> logw = {std::log(0.2) + 7.3, std::log(0.3) + 7.3,
                              std::log(0.5) + 7.3};
  const int n = 100000;
  std::vector<int> cnt(3, 0);
  for (int i = 0; i < n; ++i) ++cnt[rng.categorical_log(logw)];
  CHECK(cnt[0] / double(n) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(cnt[1] / double(n) == doctest::Approx(0.3).epsilon(0.04));
  CHECK(cnt[2] / double(n) == doctest::Approx(0.5).epsilon(0.03));

  std::vector<double> logw2 = {kNegInf, 0.0, kNegInf};
  for (int i = 0; i < 1000; ++i) CHECK(rng.categorical_log(logw2) == 1);
}

TEST_CASE("uniform_int is uniform") {
  Rng rng(3);
  std::vector<int> cnt(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    int k = rng.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
    ++cnt[k];
  }
  for (int k = 0; k < 7; ++k)
    CHECK(cnt[k] / double(n) == doctest::Approx(1.0 / 7.0).epsilon(0.05));
}

TEST_CASE("truncated standard normal passes KS against the analytic cdf") {
  Rng rng(29);
  const int n = 100000;
  struct Iv {
    double lo, hi;
  };
  for (Iv iv : {Iv{-1.0, 2.0}, Iv{0.5, kInf}, Iv{-kInf, -2.0}, Iv{3.0, 4.0},
                Iv{-0.2, 0.1}}) {
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
      draws[i] = rng.truncated_std_normal(iv.lo, iv.hi);
      CHECK(draws[i] >= iv.lo);
      CHECK(draws[i] <= iv.hi);
    }
    double flo = std::isinf(iv.lo) ? 0.0 : norm_cdf(iv.lo);
    double fhi = std::isinf(iv.hi) ? 1.0 : norm_cdf(iv.hi);
    double ks = testutil::ks_stat(
        draws, [&](double x) { return (norm_cdf(x) - flo) / (fhi - flo); });
    CHECK(ks < 0.01);
  }
}

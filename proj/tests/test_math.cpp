// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <vector>

#include "emoe/math.hpp"

using namespace emoe;

TEST_CASE("log_sum_exp basics and stability") {
  CHECK(log_sum_exp({std::log(2.0), std::log(3.0)}) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(log_sum_exp(std::log(2.0), std::log(3.0)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
  // shift-invariance at magnitudes that would overflow exp directly
  CHECK(log_sum_exp({1000.0, 1000.0}) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
  CHECK(log_sum_exp({-1000.0, -1000.0, -1000.0}) ==
        doctest::Approx(-1000.0 + std::log(3.0)).epsilon(1e-14));
  CHECK(log_sum_exp(std::vector<double>{}) == kNegInf);
  CHECK(log_sum_exp({kNegInf, 0.0}) == doctest::Approx(0.0));
  CHECK(log_sum_exp(0.7, kNegInf) == doctest::Approx(0.7));
  CHECK(log_sum_exp({kNegInf, kNegInf}) == kNegInf);
}

TEST_CASE("normal log density frozen value") {
  // log N(1.3 | 0.5, 2.0) = -0.5 log(4 pi) - 0.64/4
  CHECK(log_normal_pdf(1.3, 0.5, 2.0) ==
        doctest::Approx(-1.4255121234846454).epsilon(1e-14));
  CHECK(log_normal_pdf(0.0, 0.0, 1.0) ==
        doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-14));
}

TEST_CASE("normal cdf against high-precision references") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(norm_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(norm_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-14));
  CHECK(norm_cdf(-2.5) == doctest::Approx(0.006209665325776132).epsilon(1e-13));
  CHECK(norm_cdf(3.0) == doctest::Approx(0.9986501019683699).epsilon(1e-14));
  // symmetry
  for (double x : {0.3, 1.7, 4.2}) CHECK(norm_cdf(x) + norm_cdf(-x) == doctest::Approx(1.0));
}

TEST_CASE("normal quantile against references and round trip") {
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0));
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(norm_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-13));
  CHECK(norm_quantile(0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-13));
  CHECK(norm_quantile(0.999) == doctest::Approx(3.0902323061678132).epsilon(1e-13));
  CHECK(norm_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-13));
  for (double p = 0.01; p < 1.0; p += 0.007) {
    double x = norm_quantile(p);
    CHECK(norm_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
  for (double x = -5.0; x <= 5.0; x += 0.37)
    CHECK(norm_quantile(norm_cdf(x)) == doctest::Approx(x).epsilon(1e-11));
}

TEST_CASE("student t log density") {
  // df = 1, unit scale is Cauchy: pdf(0) = 1/pi
  CHECK(log_t_pdf(0.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(-std::log(kPi)).epsilon(1e-14));
  // symmetry about the location
  CHECK(log_t_pdf(0.3 + 1.4, 0.3, 2.1, 4.5) ==
        doctest::Approx(log_t_pdf(0.3 - 1.4, 0.3, 2.1, 4.5)).epsilon(1e-14));
  // normalisation and second moment by quadrature (df > 2)
  double mass = integrate([](double x) { return std::exp(log_t_pdf(x, 0.3, 2.1, 4.5)); },
                          -500.0, 500.0, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  double m2 = integrate(
      [](double x) { return (x - 0.3) * (x - 0.3) * std::exp(log_t_pdf(x, 0.3, 2.1, 4.5)); },
      -2000.0, 2000.0, 1e-10);
  CHECK(m2 == doctest::Approx(2.1 * 4.5 / 2.5).epsilon(1e-3));
  // wide-df limit approaches the normal density
  CHECK(log_t_pdf(0.7, 0.0, 1.0, 1e8) ==
        doctest::Approx(log_normal_pdf(0.7, 0.0, 1.0)).epsilon(1e-6));
}

TEST_CASE("log beta and log choose") {
  CHECK(log_beta(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
  CHECK(log_beta(2.5, 0.7) == doctest::Approx(log_beta(0.7, 2.5)).epsilon(1e-14));
  // B(a+1, b) = B(a, b) a / (a + b)
  CHECK(log_beta(3.5, 1.2) ==
        doctest::Approx(log_beta(2.5, 1.2) + std::log(2.5 / 3.7)).epsilon(1e-13));
  CHECK(log_choose(5, 2) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK(log_choose(10, 0) == doctest::Approx(0.0));
  CHECK(log_choose(10, 10) == doctest::Approx(0.0));
  CHECK(log_choose(52, 5) == doctest::Approx(std::log(2598960.0)).epsilon(1e-13));
}

TEST_CASE("adaptive Simpson quadrature") {
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, kPi, 1e-12) ==
        doctest::Approx(2.0).epsilon(1e-11));
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::exp(log_normal_pdf(x, 0.0, 1.0)); }, -8.0,
                  8.0, 1e-12) == doctest::Approx(1.0).epsilon(1e-12));
  double c2 = integrate([](double x) { return std::cos(3.0 * x) * std::cos(3.0 * x); },
                        0.0, 2.0 * kPi, 1e-12);
  CHECK(c2 == doctest::Approx(kPi).epsilon(1e-10));
}

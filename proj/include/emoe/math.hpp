// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace emoe {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(v))) with the usual max shift; empty input -> -inf.
double log_sum_exp(const std::vector<double>& v);
double log_sum_exp(double a, double b);

double log_normal_pdf(double x, double mean, double var);
double log_t_pdf(double x, double loc, double scale2, double df);

// standard normal cdf / quantile (Wichura's AS 241, double precision)
double norm_cdf(double x);
double norm_quantile(double p);

double log_beta(double a, double b);
double log_choose(int n, int k);

// Adaptive Simpson quadrature; used by oracle checks and by nothing hot.
// min_depth forces initial subdivision so narrow spikes are not missed by
// the first probe points.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12, int max_depth = 60, int min_depth = 6);

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/input_models.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "emoe/math.hpp"

namespace emoe {

using Family = InputFamilySpec::Family;

void XStats::init(const Dataset& data) {
  n = 0;
  dims.assign(data.dim(), DimStats{});
  for (int d = 0; d < data.dim(); ++d)
    if (data.input_spec[d].family == Family::CategoricalDirichlet)
      dims[d].counts.assign(data.input_spec[d].categories(), 0.0);
}

void XStats::add(const Dataset& data, int row) {
  ++n;
  for (int d = 0; d < data.dim(); ++d) {
    const auto& spec = data.input_spec[d];
    auto& s = dims[d];
    double v = data.x(row, d);
    ++s.n;
    switch (spec.family) {
      case Family::GaussianNig:
        s.sx += v;
        s.sxx += v * v;
        break;
      case Family::CategoricalDirichlet:
        s.counts[static_cast<int>(v)] += 1.0;
        break;
      case Family::BinomialBeta:
        s.ssum += v;
        s.lchoose_sum += log_choose(spec.trials, static_cast<int>(v));
        break;
    }
  }
}

void XStats::remove(const Dataset& data, int row) {
  assert(n > 0);
  --n;
  for (int d = 0; d < data.dim(); ++d) {
    const auto& spec = data.input_spec[d];
    auto& s = dims[d];
    double v = data.x(row, d);
    --s.n;
    switch (spec.family) {
      case Family::GaussianNig:
        s.sx -= v;
        s.sxx -= v * v;
        if (s.n == 0) { s.sx = 0.0; s.sxx = 0.0; }
        break;
      case Family::CategoricalDirichlet:
        s.counts[static_cast<int>(v)] -= 1.0;
        break;
      case Family::BinomialBeta:
        s.ssum -= v;
        s.lchoose_sum -= log_choose(spec.trials, static_cast<int>(v));
        if (s.n == 0) { s.ssum = 0.0; s.lchoose_sum = 0.0; }
        break;
    }
  }
}

void XStats::merge(const XStats& other) {
  n += other.n;
  for (size_t d = 0; d < dims.size(); ++d) {
    auto& s = dims[d];
    const auto& o = other.dims[d];
    s.n += o.n;
    s.sx += o.sx;
    s.sxx += o.sxx;
    for (size_t g = 0; g < s.counts.size(); ++g) s.counts[g] += o.counts[g];
    s.ssum += o.ssum;
    s.lchoose_sum += o.lchoose_sum;
  }
}

namespace {

// posterior NIG parameters given (n, sx, sxx); the centred update for b_hat
// avoids the cancellation of the raw sum-of-squares form
struct NigPost {
  double u, c, a, b;
};

NigPost nig_posterior(const InputFamilySpec& spec, const DimStats& s) {
  NigPost p;
  if (s.n == 0) return {spec.u0, spec.c, spec.a, spec.b};
  double nn = static_cast<double>(s.n);
  double xbar = s.sx / nn;
  double sxx_c = s.sxx - nn * xbar * xbar;  // sum (x - xbar)^2
  if (sxx_c < 0.0) sxx_c = 0.0;
  p.c = spec.c + nn;
  p.a = spec.a + 0.5 * nn;
  p.u = (spec.c * spec.u0 + s.sx) / p.c;
  double dm = xbar - spec.u0;
  p.b = spec.b + 0.5 * sxx_c + 0.5 * (spec.c * nn / p.c) * dm * dm;
  return p;
}

double nig_log_t(const NigPost& p, double x) {
  return log_t_pdf(x, p.u, (p.b / p.a) * (p.c + 1.0) / p.c, 2.0 * p.a);
}

}  // namespace

double log_marginal_dim(const InputFamilySpec& spec, double x) {
  switch (spec.family) {
    case Family::GaussianNig:
      return nig_log_t({spec.u0, spec.c, spec.a, spec.b}, x);
    case Family::CategoricalDirichlet: {
      int g = static_cast<int>(x);
      double tot = 0.0;
      for (double v : spec.gamma) tot += v;
      return std::log(spec.gamma[g] / tot);
    }
    case Family::BinomialBeta: {
      int xi = static_cast<int>(x);
      return log_choose(spec.trials, xi) +
             log_beta(spec.g0 + xi, spec.g1 + spec.trials - xi) -
             log_beta(spec.g0, spec.g1);
    }
  }
  return kNegInf;
}

double log_predictive_dim(const InputFamilySpec& spec, const DimStats& s, double x) {
  switch (spec.family) {
    case Family::GaussianNig:
      return nig_log_t(nig_posterior(spec, s), x);
    case Family::CategoricalDirichlet: {
      int g = static_cast<int>(x);
      double tot = 0.0;
      for (double v : spec.gamma) tot += v;
      return std::log((spec.gamma[g] + s.counts[g]) / (tot + s.n));
    }
    case Family::BinomialBeta: {
      int xi = static_cast<int>(x);
      double g0h = spec.g0 + s.ssum;
      double g1h = spec.g1 + static_cast<double>(s.n) * spec.trials - s.ssum;
      return log_choose(spec.trials, xi) +
             log_beta(g0h + xi, g1h + spec.trials - xi) - log_beta(g0h, g1h);
    }
  }
  return kNegInf;
}

double log_joint_dim(const InputFamilySpec& spec, const DimStats& s) {
  if (s.n == 0) return 0.0;
  double nn = static_cast<double>(s.n);
  switch (spec.family) {
    case Family::GaussianNig: {
      NigPost p = nig_posterior(spec, s);
      return -0.5 * nn * kLog2Pi + 0.5 * std::log(spec.c / p.c) +
             std::lgamma(p.a) - std::lgamma(spec.a) + spec.a * std::log(spec.b) -
             p.a * std::log(p.b);
    }
    case Family::CategoricalDirichlet: {
      double tot = 0.0, acc = 0.0;
      for (size_t g = 0; g < spec.gamma.size(); ++g) {
        tot += spec.gamma[g];
        acc += std::lgamma(spec.gamma[g] + s.counts[g]) - std::lgamma(spec.gamma[g]);
      }
      return std::lgamma(tot) - std::lgamma(tot + nn) + acc;
    }
    case Family::BinomialBeta:
      return s.lchoose_sum +
             log_beta(spec.g0 + s.ssum, spec.g1 + nn * spec.trials - s.ssum) -
             log_beta(spec.g0, spec.g1);
  }
  return kNegInf;
}

double log_marginal_row(const Dataset& data, int row) {
  double acc = 0.0;
  for (int d = 0; d < data.dim(); ++d)
    acc += log_marginal_dim(data.input_spec[d], data.x(row, d));
  return acc;
}

double log_predictive_row(const Dataset& data, const XStats& s, int row) {
  double acc = 0.0;
  for (int d = 0; d < data.dim(); ++d)
    acc += log_predictive_dim(data.input_spec[d], s.dims[d], data.x(row, d));
  return acc;
}

double log_joint_x(const Dataset& data, const XStats& s) {
  double acc = 0.0;
  for (int d = 0; d < data.dim(); ++d)
    acc += log_joint_dim(data.input_spec[d], s.dims[d]);
  return acc;
}

namespace {
double sample_nig_t(const NigPost& p, Rng& rng) {
  double scale2 = (p.b / p.a) * (p.c + 1.0) / p.c;
  return p.u + std::sqrt(scale2) * rng.student_t(2.0 * p.a);
}

int sample_categorical(const std::vector<double>& w, Rng& rng) {
  double tot = 0.0;
  for (double v : w) tot += v;
  double u = rng.uniform() * tot, acc = 0.0;
  for (size_t g = 0; g < w.size(); ++g) {
    acc += w[g];
    if (u <= acc) return static_cast<int>(g);
  }
  return static_cast<int>(w.size()) - 1;
}
}  // namespace

double sample_marginal_dim(const InputFamilySpec& spec, Rng& rng) {
  switch (spec.family) {
    case Family::GaussianNig:
      return sample_nig_t({spec.u0, spec.c, spec.a, spec.b}, rng);
    case Family::CategoricalDirichlet:
      return sample_categorical(spec.gamma, rng);
    case Family::BinomialBeta: {
      double p = rng.beta(spec.g0, spec.g1);
      return rng.binomial(spec.trials, p);
    }
  }
  return 0.0;
}

double sample_predictive_dim(const InputFamilySpec& spec, const DimStats& s, Rng& rng) {
  switch (spec.family) {
    case Family::GaussianNig:
      return sample_nig_t(nig_posterior(spec, s), rng);
    case Family::CategoricalDirichlet: {
      std::vector<double> w(spec.gamma.size());
      for (size_t g = 0; g < w.size(); ++g) w[g] = spec.gamma[g] + s.counts[g];
      return sample_categorical(w, rng);
    }
    case Family::BinomialBeta: {
      double g0h = spec.g0 + s.ssum;
      double g1h = spec.g1 + static_cast<double>(s.n) * spec.trials - s.ssum;
      double p = rng.beta(g0h, g1h);
      return rng.binomial(spec.trials, p);
    }
  }
  return 0.0;
}

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emoe/gp.hpp"
#include "emoe/input_models.hpp"
#include "emoe/math.hpp"

namespace emoe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double PriorOutputMix::density(double y) const {
  double s = 0.0;
  for (size_t i = 0; i < mean.size(); ++i)
    s += std::exp(log_normal_pdf(y, mean[i], var[i]));
  return s / static_cast<double>(mean.size());
}

double PriorOutputMix::cdf(double y) const {
  double s = 0.0;
  for (size_t i = 0; i < mean.size(); ++i)
    s += norm_cdf((y - mean[i]) / std::sqrt(var[i]));
  return s / static_cast<double>(mean.size());
}

PriorOutputMix make_prior_output_mix(const PriorConfig& priors, int samples, Rng& rng,
                                     bool sigma2_fixed) {
  if (samples < 1) throw std::invalid_argument("prior mix: samples >= 1");
  PriorOutputMix mix;
  mix.mu_beta = priors.beta0.p1;
  mix.mean.reserve(samples);
  mix.var.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    ExpertParams p = sample_expert_prior(priors, 1, rng, sigma2_fixed);
    mix.mean.push_back(p.beta0);
    mix.var.push_back(p.sigma2 + p.sf2);
  }
  return mix;
}

PriorOutputMix prior_mix_from_params(const std::vector<ExpertParams>& ps, double mu_beta) {
  PriorOutputMix mix;
  mix.mu_beta = mu_beta;
  for (const auto& p : ps) {
    mix.mean.push_back(p.beta0);
    mix.var.push_back(p.sigma2 + p.sf2);
  }
  return mix;
}

double PredictiveDist::mean() const {
  double s = fresh_w * (fresh ? fresh->mu_beta : 0.0);
  for (const auto& c : comp) s += c.w * c.mean;
  return s;
}

double PredictiveDist::density(double y) const {
  double s = fresh_w > 0.0 && fresh ? fresh_w * fresh->density(y) : 0.0;
  for (const auto& c : comp) s += c.w * std::exp(log_normal_pdf(y, c.mean, c.var));
  return s;
}

double PredictiveDist::cdf(double y) const {
  double s = fresh_w > 0.0 && fresh ? fresh_w * fresh->cdf(y) : 0.0;
  for (const auto& c : comp) s += c.w * norm_cdf((y - c.mean) / std::sqrt(c.var));
  return s;
}

std::vector<double> PredictiveDist::ordinal_probs(const std::vector<double>& cutoffs,
                                                  int levels) const {
  std::vector<double> p(levels + 1);
  double prev = 0.0;
  for (int l = 0; l < levels; ++l) {
    double c = cdf(cutoffs[l]);
    p[l] = c - prev;
    prev = c;
  }
  p[levels] = 1.0 - prev;
  for (double& v : p) v = std::max(v, 0.0);
  return p;
}

std::vector<std::pair<double, double>> PredictiveDist::hpd(double mass, double lo,
                                                           double hi,
                                                           int grid_points) const {
  if (!(mass > 0 && mass < 1)) throw std::invalid_argument("hpd: mass in (0,1)");
  if (grid_points < 16) grid_points = 16;
  const double h = (hi - lo) / (grid_points - 1);
  std::vector<double> d(grid_points);
  double dmax = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    d[i] = density(lo + i * h);
    dmax = std::max(dmax, d[i]);
  }
  // trapezoid mass of the region where density >= t
  auto mass_at = [&](double t) {
    double m = 0.0;
    for (int i = 0; i + 1 < grid_points; ++i) {
      double a = d[i] >= t ? d[i] : 0.0;
      double b = d[i + 1] >= t ? d[i + 1] : 0.0;
      m += 0.5 * (a + b) * h;
    }
    return m;
  };
  double t_lo = 0.0, t_hi = dmax;
  for (int it = 0; it < 60; ++it) {
    double t = 0.5 * (t_lo + t_hi);
    if (mass_at(t) > mass)
      t_lo = t;
    else
      t_hi = t;
  }
  double t = t_lo;
  std::vector<std::pair<double, double>> out;
  int i = 0;
  while (i < grid_points) {
    if (d[i] >= t) {
      int j = i;
      while (j + 1 < grid_points && d[j + 1] >= t) ++j;
      out.push_back({lo + i * h, lo + j * h});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

std::pair<int, int> PredictiveDist::ordinal_central(const std::vector<double>& cutoffs,
                                                    int levels, double mass) const {
  std::vector<double> p = ordinal_probs(cutoffs, levels);
  double tail = 0.5 * (1.0 - mass);
  double acc = 0.0;
  int lo = 0, hi = levels;
  for (int l = 0; l <= levels; ++l) {
    acc += p[l];
    if (acc > tail) { lo = l; break; }
  }
  acc = 0.0;
  for (int l = levels; l >= 0; --l) {
    acc += p[l];
    if (acc > tail) { hi = l; break; }
  }
  if (hi < lo) hi = lo;
  return {lo, hi};
}

namespace {

struct FittedCluster {
  ExpertParams params;
  double alpha_psi = 1.0;
  double nj = 0.0;
  GpCluster gp;
  std::vector<XStats> xstats;
  std::vector<double> xcount;
};

struct FittedDraw {
  double alpha_theta = 1.0;
  std::vector<FittedCluster> cl;
};

FittedDraw materialize(const Dataset& data, const SamplerState& s) {
  FittedDraw f;
  f.alpha_theta = s.conc.alpha_theta;
  NestedPartition part = s.part;
  std::vector<int> new2old = part.recount();  // identity for canonical states
  const int k = part.k;
  f.cl.resize(k);
  std::vector<std::vector<int>> rows(k);
  for (int n = 0; n < data.n(); ++n) rows[part.zy[n]].push_back(n);
  for (int j = 0; j < k; ++j) {
    FittedCluster& c = f.cl[j];
    c.params = s.experts[new2old[j]];
    c.alpha_psi = s.conc.alpha_psi[new2old[j]];
    c.nj = static_cast<double>(part.nj[j]);
    c.gp.rebuild(c.params, data, s.latent, rows[j]);
    c.xstats.resize(part.kj[j]);
    c.xcount.assign(part.kj[j], 0.0);
    for (auto& st : c.xstats) st.init(data);
    for (int n : rows[j]) {
      int l = part.zx[n];
      c.xstats[l].add(data, n);
      c.xcount[l] += 1.0;
    }
  }
  return f;
}

// log of the product of per-dimension predictive densities over observed dims
double log_pred_obs(const Dataset& data, const XStats* stats, const VectorXd& x,
                    const std::vector<int>& obs) {
  double s = 0.0;
  for (int d : obs) {
    const auto& spec = data.input_spec[d];
    s += stats ? log_predictive_dim(spec, stats->dims[d], x[d])
               : log_marginal_dim(spec, x[d]);
  }
  return s;
}

}  // namespace

std::vector<PredictiveDist> predict_batch(const Dataset& data,
                                          const std::vector<SamplerState>& states,
                                          bool dp_mode, const MatrixXd& Xstar,
                                          const PriorOutputMix& fresh,
                                          const PredictOptions& opts) {
  if (states.empty()) throw std::invalid_argument("predict: no posterior draws");
  if (Xstar.cols() != data.dim())
    throw std::invalid_argument("predict: Xstar dimension mismatch");
  Rng rng(opts.seed);
  const int Q = static_cast<int>(Xstar.rows());
  const double N = static_cast<double>(data.n());
  const double inv_draws = 1.0 / static_cast<double>(states.size());

  std::vector<PredictiveDist> out(Q);
  for (auto& dist : out) dist.fresh = &fresh;

  for (const SamplerState& s : states) {
    FittedDraw f = materialize(data, s);
    for (int q = 0; q < Q; ++q) {
      VectorXd x = Xstar.row(q).transpose();
      std::vector<int> obs, mis;
      for (int d = 0; d < data.dim(); ++d)
        (std::isfinite(x[d]) ? obs : mis).push_back(d);
      const bool complete = mis.empty();
      const int R = complete ? 1 : std::max(1, opts.completions);

      // one weight per component: fresh cluster, then per y-cluster either
      // the single DP term or the occupied x-clusters plus a new-x term
      std::vector<double> logw;
      std::vector<std::pair<int, int>> cid;  // (j, l); l == -1 new x; j == -1 fresh
      logw.push_back(std::log(f.alpha_theta / (f.alpha_theta + N)) +
                     log_pred_obs(data, nullptr, x, obs));
      cid.push_back({-1, -1});
      for (size_t j = 0; j < f.cl.size(); ++j) {
        const FittedCluster& c = f.cl[j];
        double base = std::log(c.nj / (f.alpha_theta + N));
        if (dp_mode) {
          logw.push_back(base + log_pred_obs(data, &c.xstats[0], x, obs));
          cid.push_back({static_cast<int>(j), 0});
          continue;
        }
        double denom = std::log(c.alpha_psi + c.nj);
        for (size_t l = 0; l < c.xstats.size(); ++l) {
          logw.push_back(base + std::log(c.xcount[l]) - denom +
                         log_pred_obs(data, &c.xstats[l], x, obs));
          cid.push_back({static_cast<int>(j), static_cast<int>(l)});
        }
        logw.push_back(base + std::log(c.alpha_psi) - denom +
                       log_pred_obs(data, nullptr, x, obs));
        cid.push_back({static_cast<int>(j), -1});
      }
      double lse = log_sum_exp(logw);

      PredictiveDist& dist = out[q];
      for (size_t t = 0; t < logw.size(); ++t) {
        double w = std::exp(logw[t] - lse) * inv_draws;
        auto [j, l] = cid[t];
        if (j < 0) {
          dist.fresh_w += w;
          continue;
        }
        const FittedCluster& c = f.cl[j];
        const XStats* st = (l >= 0) ? &c.xstats[l] : nullptr;
        double wr = w / static_cast<double>(R);
        for (int r = 0; r < R; ++r) {
          VectorXd xc = x;
          for (int d : mis) {
            const auto& spec = data.input_spec[d];
            xc[d] = st ? sample_predictive_dim(spec, st->dims[d], rng)
                       : sample_marginal_dim(spec, rng);
          }
          GpPrediction pr = c.gp.predict(c.params, xc);
          dist.comp.push_back({wr, pr.mean, pr.var});
        }
      }
    }
  }
  return out;
}

}  // namespace emoe

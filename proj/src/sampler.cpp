// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "emoe/math.hpp"

namespace emoe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SamplerOptions::validate() const {
  if (iters <= burn_in) throw std::invalid_argument("options: iters must exceed burn_in");
  if (burn_in < 0 || thin < 1) throw std::invalid_argument("options: bad burn_in/thin");
  if (m_aux < 1) throw std::invalid_argument("options: m_aux >= 1");
  if (hmc_steps < 0 || !(hmc_step0 > 0))
    throw std::invalid_argument("options: bad HMC settings");
  if (!(hmc_target_accept > 0 && hmc_target_accept < 1))
    throw std::invalid_argument("options: hmc_target_accept in (0,1)");
}

EdpSampler::EdpSampler(const Dataset& data, const PriorConfig& priors,
                       SamplerOptions opts)
    : data_(data), priors_(priors), opts_(opts), rng_(opts.seed) {
  data_.validate();
  priors_.validate(data_.dim());
  opts_.validate();
  sigma2_fixed_ =
      data_.output == OutputKind::OrdinalProbit && data_.ordinal_levels == 1;
  assign_.assign(data_.n(), {-1, -1});
  latent_.resize(data_.n());
  hmc_eps_ = opts_.hmc_step0;
  hmc_mu_ = std::log(10.0 * opts_.hmc_step0);
}

void EdpSampler::freeze_experts(const ExpertParams& tmpl) {
  experts_frozen_ = true;
  expert_template_ = tmpl;
}

void EdpSampler::freeze_concentrations(double at, double ap) {
  conc_frozen_ = true;
  frozen_alpha_theta_ = at;
  frozen_alpha_psi_ = ap;
  alpha_theta_ = at;
}

std::vector<int> EdpSampler::kj_vector() const {
  std::vector<int> kj(cl_.size());
  for (size_t j = 0; j < cl_.size(); ++j) kj[j] = static_cast<int>(cl_[j].xcl.size());
  return kj;
}

int EdpSampler::kx2plus_of(const std::vector<int>& kj) {
  int c = 0;
  for (int v : kj)
    if (v > 1) c += v;
  return c;
}

int EdpSampler::kx1_of(const std::vector<int>& kj) {
  int c = 0;
  for (int v : kj)
    if (v == 1) ++c;
  return c;
}

int EdpSampler::kx1plus_now() const {
  int c = 0;
  for (const auto& yc : cl_)
    for (const auto& xc : yc.xcl)
      if (static_cast<int>(xc.members.size()) > 1) ++c;
  return c;
}

void EdpSampler::rebuild_caches() {
  for (auto& yc : cl_) {
    auto rows = yc.gp.rows();
    yc.gp.rebuild(yc.params, data_, latent_, std::move(rows));
  }
}

// ---------------------------------------------------------------------------
// state snapshots

SamplerState EdpSampler::state() const {
  SamplerState s;
  const int N = data_.n();
  s.part.zy.resize(N);
  s.part.zx.resize(N);
  for (int n = 0; n < N; ++n) {
    s.part.zy[n] = assign_[n].first;
    s.part.zx[n] = assign_[n].second;
  }
  std::vector<int> new2old = s.part.recount();
  s.experts.resize(s.part.k);
  s.conc.alpha_psi.resize(s.part.k);
  for (int j = 0; j < s.part.k; ++j) {
    s.experts[j] = cl_[new2old[j]].params;
    s.conc.alpha_psi[j] = cl_[new2old[j]].alpha_psi;
  }
  s.conc.alpha_theta = alpha_theta_;
  s.latent = latent_;
  return s;
}

void EdpSampler::set_state(const SamplerState& s_in) {
  SamplerState s = s_in;
  if (data_.output == OutputKind::Gaussian) s.latent = data_.y;
  if (s.latent.size() == 0) s.latent = data_.y;
  validate_state(s, data_);
  // arbitrary labels are fine; experts/alpha_psi follow order of appearance
  s.part.recount();
  const int N = data_.n();
  int k = static_cast<int>(s.experts.size());
  for (int n = 0; n < N; ++n)
    if (s.part.zy[n] < 0 || s.part.zy[n] >= k)
      throw std::invalid_argument("set_state: zy labels must index experts");
  latent_ = s.latent;
  alpha_theta_ = s.conc.alpha_theta;
  cl_.assign(k, YCl{});
  for (int j = 0; j < k; ++j) {
    cl_[j].params = s.experts[j];
    cl_[j].alpha_psi = s.conc.alpha_psi[j];
  }
  // group rows by (zy, zx), preserving dataset order
  std::vector<std::vector<std::pair<int, int>>> xgroups(k);  // (zx label, first row)
  std::vector<std::vector<int>> yrows(k);
  for (int n = 0; n < N; ++n) {
    int j = s.part.zy[n];
    yrows[j].push_back(n);
    int zx = s.part.zx[n];
    int l = -1;
    for (size_t t = 0; t < xgroups[j].size(); ++t)
      if (xgroups[j][t].first == zx) { l = static_cast<int>(t); break; }
    if (l < 0) {
      l = static_cast<int>(xgroups[j].size());
      xgroups[j].push_back({zx, n});
      cl_[j].xcl.push_back(XCl{});
      cl_[j].xcl[l].stats.init(data_);
    }
    cl_[j].xcl[l].members.push_back(n);
    cl_[j].xcl[l].stats.add(data_, n);
    assign_[n] = {j, l};
  }
  for (int j = 0; j < k; ++j)
    cl_[j].gp.rebuild(cl_[j].params, data_, latent_, std::move(yrows[j]));
}

void EdpSampler::audit_consistency() const {
  const int N = data_.n();
  auto fail = [](const std::string& what) {
    throw std::logic_error("sampler consistency: " + what);
  };
  long total = 0;
  for (size_t j = 0; j < cl_.size(); ++j) {
    const YCl& c = cl_[j];
    if (c.xcl.empty()) fail("empty y-cluster");
    long members = 0;
    std::vector<int> all;
    for (size_t l = 0; l < c.xcl.size(); ++l) {
      const XCl& xc = c.xcl[l];
      if (xc.members.empty()) fail("empty x-cluster");
      if (xc.stats.n != static_cast<int>(xc.members.size()))
        fail("x stats count != member count");
      for (int n : xc.members) {
        if (assign_[n] != std::make_pair(static_cast<int>(j), static_cast<int>(l)))
          fail("assign table does not point back to the member slot");
        all.push_back(n);
      }
      members += static_cast<long>(xc.members.size());
    }
    std::vector<int> grows = c.gp.rows();
    std::sort(grows.begin(), grows.end());
    std::sort(all.begin(), all.end());
    if (grows != all) fail("gp cache rows != x-cluster members");
    if (c.size() != static_cast<int>(members)) fail("gp size != member count");
    total += members;
  }
  if (total != N) fail("membership does not cover the dataset");
}

void EdpSampler::init_from_prior() {
  const int N = data_.n();
  if (data_.output == OutputKind::Gaussian) {
    latent_ = data_.y;
  } else {
    const auto& eps = data_.cutoffs;
    const int L = data_.ordinal_levels;
    for (int n = 0; n < N; ++n) {
      int yi = static_cast<int>(data_.y[n]);
      if (yi == 0)
        latent_[n] = eps[0] - 0.5;
      else if (yi == L)
        latent_[n] = eps[L - 1] + 0.5;
      else
        latent_[n] = 0.5 * (eps[yi - 1] + eps[yi]);
    }
  }
  alpha_theta_ =
      conc_frozen_ ? frozen_alpha_theta_ : rng_.gamma(priors_.u_theta, priors_.v_theta);
  cl_.clear();
  for (int n = 0; n < N; ++n) {
    std::vector<double> logw;
    std::vector<std::pair<int, int>> cands;  // (j, l); l == -1 new x; j == -1 new y
    for (size_t j = 0; j < cl_.size(); ++j) {
      const YCl& c = cl_[j];
      double nj = c.size();
      if (opts_.dp_mode) {
        logw.push_back(std::log(nj));
        cands.push_back({static_cast<int>(j), 0});
        continue;
      }
      double denom = std::log(c.alpha_psi + nj);
      for (size_t l = 0; l < c.xcl.size(); ++l) {
        logw.push_back(std::log(nj) + std::log((double)c.xcl[l].members.size()) - denom);
        cands.push_back({static_cast<int>(j), static_cast<int>(l)});
      }
      logw.push_back(std::log(nj) + std::log(c.alpha_psi) - denom);
      cands.push_back({static_cast<int>(j), -1});
    }
    logw.push_back(std::log(alpha_theta_));
    cands.push_back({-1, -1});
    int pick = rng_.categorical_log(logw);
    auto [j, l] = cands[pick];
    if (j < 0) {
      ExpertParams p = experts_frozen_
                           ? expert_template_
                           : sample_expert_prior(priors_, data_.dim(), rng_, sigma2_fixed_);
      double ap = conc_frozen_ ? frozen_alpha_psi_
                               : rng_.gamma(priors_.u_psi, priors_.v_psi);
      insert_new_y(n, p, ap);
    } else if (l < 0) {
      insert_new_x(n, j);
    } else {
      insert_existing(n, j, l);
    }
  }
}

// ---------------------------------------------------------------------------
// bookkeeping

void EdpSampler::remove_point(int n, bool* removed_singleton_y, ExpertParams* retained,
                              double* retained_alpha) {
  auto [j, l] = assign_[n];
  assert(j >= 0);
  YCl& c = cl_[j];
  *removed_singleton_y = false;
  if (c.size() == 1) {
    *removed_singleton_y = true;
    *retained = c.params;
    *retained_alpha = c.alpha_psi;
    cl_.erase(cl_.begin() + j);
    for (auto& a : assign_)
      if (a.first > j) --a.first;
    assign_[n] = {-1, -1};
    return;
  }
  c.gp.remove_row(c.params, data_, latent_, n);
  XCl& xc = c.xcl[l];
  xc.members.erase(std::find(xc.members.begin(), xc.members.end(), n));
  xc.stats.remove(data_, n);
  if (xc.members.empty()) {
    c.xcl.erase(c.xcl.begin() + l);
    for (auto& a : assign_)
      if (a.first == j && a.second > l) --a.second;
  }
  assign_[n] = {-1, -1};
}

void EdpSampler::insert_existing(int n, int j, int l) {
  YCl& c = cl_[j];
  c.gp.add_row(c.params, data_, latent_, n);
  c.xcl[l].members.push_back(n);
  c.xcl[l].stats.add(data_, n);
  assign_[n] = {j, l};
}

void EdpSampler::insert_new_x(int n, int j) {
  YCl& c = cl_[j];
  c.gp.add_row(c.params, data_, latent_, n);
  XCl xc;
  xc.stats.init(data_);
  xc.stats.add(data_, n);
  xc.members.push_back(n);
  c.xcl.push_back(std::move(xc));
  assign_[n] = {j, static_cast<int>(c.xcl.size()) - 1};
}

void EdpSampler::insert_new_y(int n, const ExpertParams& params, double alpha_psi) {
  YCl c;
  c.params = params;
  c.alpha_psi = alpha_psi;
  c.gp.rebuild(c.params, data_, latent_, {n});
  XCl xc;
  xc.stats.init(data_);
  xc.stats.add(data_, n);
  xc.members.push_back(n);
  c.xcl.push_back(std::move(xc));
  cl_.push_back(std::move(c));
  assign_[n] = {static_cast<int>(cl_.size()) - 1, 0};
}

double EdpSampler::log_hy_point(int n, const YCl& c) const {
  GpPrediction pr = c.gp.predict(c.params, data_.x.row(n).transpose());
  return log_normal_pdf(latent_[n], pr.mean, pr.var);
}

double EdpSampler::log_hy_fresh(int n, const ExpertParams& p) const {
  return log_normal_pdf(latent_[n], p.beta0, p.sigma2 + p.sf2);
}

// ---------------------------------------------------------------------------
// local Gibbs scan

void EdpSampler::gibbs_sweep() {
  const int N = data_.n();
  ++stats_.gibbs_scans;
  for (int n = 0; n < N; ++n) {
    std::vector<int> old_xmates, old_ymates;
    {
      auto [oj, ol] = assign_[n];
      for (int t : cl_[oj].xcl[ol].members)
        if (t != n) old_xmates.push_back(t);
      for (const auto& xc : cl_[oj].xcl)
        for (int t : xc.members)
          if (t != n) old_ymates.push_back(t);
      std::sort(old_xmates.begin(), old_xmates.end());
      std::sort(old_ymates.begin(), old_ymates.end());
    }
    bool had_singleton = false;
    ExpertParams retained;
    double retained_alpha = 0.0;
    remove_point(n, &had_singleton, &retained, &retained_alpha);

    std::vector<double> logw;
    std::vector<std::pair<int, int>> cands;  // l == -1: new x; j <= -1: fresh index
    double log_hx_prior = log_marginal_row(data_, n);
    for (size_t j = 0; j < cl_.size(); ++j) {
      const YCl& c = cl_[j];
      double hy = log_hy_point(n, c);
      double nj = c.size();
      if (opts_.dp_mode) {
        logw.push_back(std::log(nj) + hy +
                       log_predictive_row(data_, c.xcl[0].stats, n));
        cands.push_back({static_cast<int>(j), 0});
        continue;
      }
      double denom = std::log(c.alpha_psi + nj);
      for (size_t l = 0; l < c.xcl.size(); ++l) {
        logw.push_back(std::log(nj) + std::log((double)c.xcl[l].members.size()) -
                       denom + hy + log_predictive_row(data_, c.xcl[l].stats, n));
        cands.push_back({static_cast<int>(j), static_cast<int>(l)});
      }
      logw.push_back(std::log(nj) + std::log(c.alpha_psi) - denom + hy + log_hx_prior);
      cands.push_back({static_cast<int>(j), -1});
    }
    // m fresh-parameter candidates; a removed singleton's parameters take
    // the first slot
    const int m = opts_.m_aux;
    std::vector<ExpertParams> fresh(m);
    for (int t = 0; t < m; ++t) {
      if (t == 0 && had_singleton)
        fresh[t] = retained;
      else
        fresh[t] = experts_frozen_
                       ? expert_template_
                       : sample_expert_prior(priors_, data_.dim(), rng_, sigma2_fixed_);
      logw.push_back(std::log(alpha_theta_) - std::log((double)m) +
                     log_hy_fresh(n, fresh[t]) + log_hx_prior);
      cands.push_back({-1 - t, -1});
    }

    int pick = rng_.categorical_log(logw);
    auto [j, l] = cands[pick];
    if (j >= 0) {
      if (l >= 0)
        insert_existing(n, j, l);
      else
        insert_new_x(n, j);
    } else {
      int t = -1 - j;
      double ap;
      if (t == 0 && had_singleton)
        ap = retained_alpha;
      else
        ap = conc_frozen_ ? frozen_alpha_psi_ : rng_.gamma(priors_.u_psi, priors_.v_psi);
      insert_new_y(n, fresh[t], ap);
    }
    std::vector<int> new_xmates, new_ymates;
    {
      auto [nj, nl] = assign_[n];
      for (int t : cl_[nj].xcl[nl].members)
        if (t != n) new_xmates.push_back(t);
      for (const auto& xc : cl_[nj].xcl)
        for (int t : xc.members)
          if (t != n) new_ymates.push_back(t);
      std::sort(new_xmates.begin(), new_xmates.end());
      std::sort(new_ymates.begin(), new_ymates.end());
    }
    if (new_xmates != old_xmates || new_ymates != old_ymates)
      ++stats_.gibbs_reassigned;
  }
}

// ---------------------------------------------------------------------------
// global moves on whole x-clusters (between y-clusters)

void EdpSampler::apply_block_move(int j, int l, int h) {
  XCl block = std::move(cl_[j].xcl[l]);
  cl_[j].xcl.erase(cl_[j].xcl.begin() + l);
  for (auto& a : assign_)
    if (a.first == j && a.second > l) --a.second;

  auto hrows = cl_[h].gp.rows();
  hrows.insert(hrows.end(), block.members.begin(), block.members.end());
  int newl = static_cast<int>(cl_[h].xcl.size());
  for (int n : block.members) assign_[n] = {h, newl};
  cl_[h].xcl.push_back(std::move(block));
  cl_[h].gp.rebuild(cl_[h].params, data_, latent_, std::move(hrows));

  if (cl_[j].xcl.empty()) {
    cl_.erase(cl_.begin() + j);
    for (auto& a : assign_)
      if (a.first > j) --a.first;
  } else {
    std::vector<int> jrows;
    for (const auto& xc : cl_[j].xcl)
      jrows.insert(jrows.end(), xc.members.begin(), xc.members.end());
    cl_[j].gp.rebuild(cl_[j].params, data_, latent_, std::move(jrows));
  }
}

namespace {
MatrixXd gather_x(const Dataset& data, const std::vector<int>& rows) {
  MatrixXd X(rows.size(), data.dim());
  for (size_t i = 0; i < rows.size(); ++i) X.row(i) = data.x.row(rows[i]);
  return X;
}
VectorXd gather_y(const VectorXd& latent, const std::vector<int>& rows) {
  VectorXd y(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) y[i] = latent[rows[i]];
  return y;
}
}  // namespace

void EdpSampler::y_moves() {
  move1();
  move23();
}

void EdpSampler::move1() {
  const int k = static_cast<int>(cl_.size());
  std::vector<std::pair<int, int>> blocks;
  for (int j = 0; j < k; ++j)
    if (cl_[j].xcl.size() >= 2)
      for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
        blocks.push_back({j, static_cast<int>(l)});
  if (blocks.empty() || k < 2) return;

  auto [j, l] = blocks[rng_.uniform_int(static_cast<int>(blocks.size()))];
  const auto& rows = cl_[j].xcl[l].members;
  MatrixXd Xb = gather_x(data_, rows);
  VectorXd yb = gather_y(latent_, rows);

  std::vector<double> vals(k, 0.0);
  std::vector<double> fwd;
  std::vector<int> fwd_idx;
  for (int h = 0; h < k; ++h) {
    if (h == j) continue;
    vals[h] = cl_[h].gp.log_conditional_block(cl_[h].params, Xb, yb);
    fwd.push_back(vals[h]);
    fwd_idx.push_back(h);
  }
  double lse_fwd = log_sum_exp(fwd);
  int h = fwd_idx[rng_.categorical_log(fwd)];

  // reverse-proposal normaliser: cluster j appears with the block removed
  std::vector<int> jrows_red;
  for (const auto& xc : cl_[j].xcl)
    if (&xc != &cl_[j].xcl[l])
      jrows_red.insert(jrows_red.end(), xc.members.begin(), xc.members.end());
  GpCluster redj;
  redj.rebuild(cl_[j].params, data_, latent_, jrows_red);
  double val_redj = redj.log_conditional_block(cl_[j].params, Xb, yb);
  std::vector<double> rev;
  for (int h2 = 0; h2 < k; ++h2) {
    if (h2 == h) continue;
    rev.push_back(h2 == j ? val_redj : vals[h2]);
  }
  double lse_rev = log_sum_exp(rev);

  double Nj = cl_[j].size(), Nh = cl_[h].size(), Nb = static_cast<double>(rows.size());
  double aj = cl_[j].alpha_psi, ah = cl_[h].alpha_psi;
  std::vector<int> kjv = kj_vector();
  int kx2 = kx2plus_of(kjv);
  --kjv[j];
  ++kjv[h];
  int kx2s = kx2plus_of(kjv);

  double logp = std::lgamma(Nj - Nb) + std::lgamma(Nh + Nb) - std::lgamma(Nj) -
                std::lgamma(Nh) + std::lgamma(aj + Nj) + std::lgamma(ah + Nh) -
                std::lgamma(aj + Nj - Nb) - std::lgamma(ah + Nh + Nb) + std::log(ah) -
                std::log(aj) + std::log((double)kx2) - std::log((double)kx2s) +
                lse_fwd - lse_rev;
  ++stats_.move1.proposed;
  if (std::log(rng_.uniform()) < logp) {
    ++stats_.move1.accepted;
    apply_block_move(j, l, h);
  }
}

void EdpSampler::move23() {
  const int k = static_cast<int>(cl_.size());
  std::vector<int> kjv = kj_vector();
  int kx2 = kx2plus_of(kjv), k1 = kx1_of(kjv);
  bool can2 = kx2 > 0, can3 = k1 > 0;
  if (!can2 && !can3) return;
  double w2 = can2 ? (can3 ? 0.5 : 1.0) : 0.0;
  double w3 = can3 ? (can2 ? 0.5 : 1.0) : 0.0;
  bool do2 = can2 && (!can3 || rng_.uniform() < 0.5);

  if (do2) {
    // Move 2: split an x-cluster out of y-cluster j into a brand-new
    // y-cluster with parameters drawn from the priors
    std::vector<std::pair<int, int>> blocks;
    for (int j = 0; j < k; ++j)
      if (cl_[j].xcl.size() >= 2)
        for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
          blocks.push_back({j, static_cast<int>(l)});
    auto [j, l] = blocks[rng_.uniform_int(static_cast<int>(blocks.size()))];
    const auto& rows = cl_[j].xcl[l].members;
    MatrixXd Xb = gather_x(data_, rows);
    VectorXd yb = gather_y(latent_, rows);

    ExpertParams pnew = experts_frozen_
                            ? expert_template_
                            : sample_expert_prior(priors_, data_.dim(), rng_, sigma2_fixed_);
    double anew =
        conc_frozen_ ? frozen_alpha_psi_ : rng_.gamma(priors_.u_psi, priors_.v_psi);
    double log_hnew = gp_log_marginal(pnew, Xb, yb);

    std::vector<int> jrows_red;
    for (const auto& xc : cl_[j].xcl)
      if (&xc != &cl_[j].xcl[l])
        jrows_red.insert(jrows_red.end(), xc.members.begin(), xc.members.end());
    GpCluster redj;
    redj.rebuild(cl_[j].params, data_, latent_, jrows_red);
    std::vector<double> rev;
    for (int h = 0; h < k; ++h)
      rev.push_back(h == j
                        ? redj.log_conditional_block(cl_[j].params, Xb, yb)
                        : cl_[h].gp.log_conditional_block(cl_[h].params, Xb, yb));
    double lse_rev = log_sum_exp(rev);

    double Nj = cl_[j].size(), Nb = static_cast<double>(rows.size());
    double aj = cl_[j].alpha_psi;
    std::vector<int> kjp = kjv;
    --kjp[j];
    kjp.push_back(1);
    int kx1s = kx1_of(kjp), kx2s = kx2plus_of(kjp);
    int denom_count = opts_.move2_ratio_as_printed ? std::max(k1, 1) : kx1s;
    double w3s = (kx2s == 0) ? 1.0 : 0.5;

    double logp = std::lgamma(Nj - Nb) + std::lgamma(Nb) - std::lgamma(Nj) +
                  std::lgamma(aj + Nj) + std::lgamma(anew) -
                  std::lgamma(aj + Nj - Nb) - std::lgamma(anew + Nb) +
                  std::log(alpha_theta_) + std::log(anew) - std::log(aj) +
                  std::log((double)kx2) - std::log((double)denom_count) + log_hnew -
                  lse_rev + std::log(w3s) - std::log(w2);
    ++stats_.move2.proposed;
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.move2.accepted;
      XCl block = std::move(cl_[j].xcl[l]);
      cl_[j].xcl.erase(cl_[j].xcl.begin() + l);
      for (auto& a : assign_)
        if (a.first == j && a.second > l) --a.second;
      cl_[j].gp = std::move(redj);
      YCl nc;
      nc.params = pnew;
      nc.alpha_psi = anew;
      std::vector<int> brows = block.members;
      nc.xcl.push_back(std::move(block));
      nc.gp.rebuild(nc.params, data_, latent_, brows);
      int newj = static_cast<int>(cl_.size());
      for (int n : brows) assign_[n] = {newj, 0};
      cl_.push_back(std::move(nc));
    }
  } else {
    // Move 3: merge a single-x y-cluster into an existing y-cluster
    if (k < 2) return;
    std::vector<int> singles;
    for (int j = 0; j < k; ++j)
      if (cl_[j].xcl.size() == 1) singles.push_back(j);
    int j = singles[rng_.uniform_int(static_cast<int>(singles.size()))];
    const auto& rows = cl_[j].xcl[0].members;
    MatrixXd Xb = gather_x(data_, rows);
    VectorXd yb = gather_y(latent_, rows);

    std::vector<double> fwd;
    std::vector<int> fwd_idx;
    for (int h = 0; h < k; ++h) {
      if (h == j) continue;
      fwd.push_back(cl_[h].gp.log_conditional_block(cl_[h].params, Xb, yb));
      fwd_idx.push_back(h);
    }
    double lse_fwd = log_sum_exp(fwd);
    int h = fwd_idx[rng_.categorical_log(fwd)];
    double log_hj = cl_[j].gp.log_marginal_cached(cl_[j].params);

    double Nj = cl_[j].size(), Nh = cl_[h].size();
    double aj = cl_[j].alpha_psi, ah = cl_[h].alpha_psi;
    std::vector<int> kjp;
    for (int t = 0; t < k; ++t)
      if (t != j) kjp.push_back(kjv[t] + (t == h ? 1 : 0));
    int kx2s = kx2plus_of(kjp), kx1s = kx1_of(kjp);
    double w2s = (kx1s == 0) ? 1.0 : 0.5;

    double logp = std::lgamma(Nh + Nj) - std::lgamma(Nh) - std::lgamma(Nj) +
                  std::lgamma(aj + Nj) + std::lgamma(ah + Nh) -
                  std::lgamma(ah + Nh + Nj) - std::lgamma(aj) -
                  std::log(alpha_theta_) + std::log(ah) - std::log(aj) +
                  std::log((double)k1) - std::log((double)kx2s) + lse_fwd - log_hj +
                  std::log(w2s) - std::log(w3);
    ++stats_.move3.proposed;
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.move3.accepted;
      apply_block_move(j, 0, h);
    }
  }
}

// ---------------------------------------------------------------------------
// split-merge of x-clusters within a y-cluster

void EdpSampler::split_merge_moves() {
  pair_a();
  pair_b();
}

namespace {
std::vector<int> sorted_members(const std::vector<int>& m) {
  std::vector<int> s = m;
  std::sort(s.begin(), s.end());
  return s;
}
}  // namespace

void EdpSampler::pair_a() {
  int kx1p = kx1plus_now();
  std::vector<int> kjv = kj_vector();
  int kx2 = kx2plus_of(kjv);
  bool can_ss = kx1p > 0, can_dm = kx2 > 0;
  if (!can_ss && !can_dm) return;
  double w_ss = can_ss ? (can_dm ? 0.5 : 1.0) : 0.0;
  double w_dm = can_dm ? (can_ss ? 0.5 : 1.0) : 0.0;
  bool do_ss = can_ss && (!can_dm || rng_.uniform() < 0.5);

  if (do_ss) {
    // smart split: pick a poorly fitting x-cluster, reallocate its members
    // sequentially between the old label and a fresh one
    std::vector<std::pair<int, int>> cands;
    std::vector<double> selw;
    for (size_t j = 0; j < cl_.size(); ++j)
      for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
        if (cl_[j].xcl[l].members.size() > 1) {
          cands.push_back({static_cast<int>(j), static_cast<int>(l)});
          selw.push_back(-log_joint_x(data_, cl_[j].xcl[l].stats));
        }
    double lse_sel = log_sum_exp(selw);
    int pick = rng_.categorical_log(selw);
    auto [j, l] = cands[pick];
    double logq_sel = selw[pick] - lse_sel;

    std::vector<int> order = sorted_members(cl_[j].xcl[l].members);
    XStats sa, sb;
    sa.init(data_);
    sb.init(data_);
    std::vector<int> la, lb;
    double logq_seq = 0.0;
    for (int n : order) {
      double wa = log_predictive_row(data_, sa, n);
      double wb = log_predictive_row(data_, sb, n);
      double norm = log_sum_exp(wa, wb);
      if (rng_.uniform() < std::exp(wa - norm)) {
        logq_seq += wa - norm;
        sa.add(data_, n);
        la.push_back(n);
      } else {
        logq_seq += wb - norm;
        sb.add(data_, n);
        lb.push_back(n);
      }
    }
    ++stats_.smart_split.proposed;
    if (la.empty() || lb.empty()) {
      ++stats_.smart_split.accepted;  // degenerate proposal, stay put
      return;
    }
    double NA = static_cast<double>(la.size()), NB = static_cast<double>(lb.size());
    double Nl = NA + NB;
    double log_target = std::log(cl_[j].alpha_psi) + std::lgamma(NA) + std::lgamma(NB) -
                        std::lgamma(Nl) + log_joint_x(data_, sa) + log_joint_x(data_, sb) -
                        log_joint_x(data_, cl_[j].xcl[l].stats);
    std::vector<int> kjp = kjv;
    ++kjp[j];
    int kx2s = kx2plus_of(kjp);
    double logq_dm_rev = std::log(2.0) - std::log((double)kx2s) -
                         std::log((double)kjv[j]);  // k_j* - 1 = k_j
    double logq_ss_fwd = logq_sel + std::log(2.0) + logq_seq;
    int kx1ps = kx1p - 1 + (la.size() > 1 ? 1 : 0) + (lb.size() > 1 ? 1 : 0);
    double w_dm_s = (kx1ps == 0) ? 1.0 : 0.5;
    double logp = log_target + logq_dm_rev - logq_ss_fwd + std::log(w_dm_s) -
                  std::log(w_ss);
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.smart_split.accepted;
      cl_[j].xcl[l].members = la;
      cl_[j].xcl[l].stats = sa;
      XCl xb;
      xb.members = lb;
      xb.stats = sb;
      int newl = static_cast<int>(cl_[j].xcl.size());
      cl_[j].xcl.push_back(std::move(xb));
      for (int n : lb) assign_[n] = {j, newl};
      for (int n : la) assign_[n] = {j, l};
    }
  } else {
    // dumb merge: uniform pair of x-clusters within a y-cluster
    std::vector<std::pair<int, int>> blocks;
    for (size_t j = 0; j < cl_.size(); ++j)
      if (cl_[j].xcl.size() >= 2)
        for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
          blocks.push_back({static_cast<int>(j), static_cast<int>(l)});
    auto [j, l] = blocks[rng_.uniform_int(static_cast<int>(blocks.size()))];
    int kj = static_cast<int>(cl_[j].xcl.size());
    int pick2 = rng_.uniform_int(kj - 1);
    int l2 = pick2 + (pick2 >= l ? 1 : 0);

    const XCl& A = cl_[j].xcl[l];
    const XCl& B = cl_[j].xcl[l2];
    XStats sm = A.stats;
    sm.merge(B.stats);
    double NA = static_cast<double>(A.members.size());
    double NB = static_cast<double>(B.members.size());
    double NM = NA + NB;
    double log_hm = log_joint_x(data_, sm);
    double log_target = std::lgamma(NM) + log_hm - std::log(cl_[j].alpha_psi) -
                        std::lgamma(NA) - std::lgamma(NB) -
                        log_joint_x(data_, A.stats) - log_joint_x(data_, B.stats);

    // reverse smart split in the merged state
    std::vector<double> selw_star;
    for (size_t j2 = 0; j2 < cl_.size(); ++j2)
      for (size_t l3 = 0; l3 < cl_[j2].xcl.size(); ++l3) {
        if (j2 == static_cast<size_t>(j) &&
            (l3 == static_cast<size_t>(l) || l3 == static_cast<size_t>(l2)))
          continue;
        if (cl_[j2].xcl[l3].members.size() > 1)
          selw_star.push_back(-log_joint_x(data_, cl_[j2].xcl[l3].stats));
      }
    selw_star.push_back(-log_hm);
    double logq_sel_rev = -log_hm - log_sum_exp(selw_star);

    std::vector<int> order;
    order.insert(order.end(), A.members.begin(), A.members.end());
    order.insert(order.end(), B.members.begin(), B.members.end());
    std::sort(order.begin(), order.end());
    XStats sa, sb;
    sa.init(data_);
    sb.init(data_);
    double logq_seq_rev = 0.0;
    for (int n : order) {
      bool ina = std::find(A.members.begin(), A.members.end(), n) != A.members.end();
      double wa = log_predictive_row(data_, sa, n);
      double wb = log_predictive_row(data_, sb, n);
      double norm = log_sum_exp(wa, wb);
      if (ina) {
        logq_seq_rev += wa - norm;
        sa.add(data_, n);
      } else {
        logq_seq_rev += wb - norm;
        sb.add(data_, n);
      }
    }
    double logq_ss_rev = logq_sel_rev + std::log(2.0) + logq_seq_rev;
    double logq_dm_fwd =
        std::log(2.0) - std::log((double)kx2) - std::log((double)(kj - 1));
    std::vector<int> kjp = kjv;
    --kjp[j];
    int kx2s = kx2plus_of(kjp);
    double w_ss_s = (kx2s == 0) ? 1.0 : 0.5;  // merged cluster is splittable
    double logp = log_target + logq_ss_rev - logq_dm_fwd + std::log(w_ss_s) -
                  std::log(w_dm);
    ++stats_.dumb_merge.proposed;
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.dumb_merge.accepted;
      merge_x_clusters(j, l, l2);
    }
  }
}

// pool x-cluster l2 into l within y-cluster j; fixes assignment indices
void EdpSampler::merge_x_clusters(int j, int l, int l2) {
  XCl& keep = cl_[j].xcl[l];
  XCl& gone = cl_[j].xcl[l2];
  keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
  keep.stats.merge(gone.stats);
  cl_[j].xcl.erase(cl_[j].xcl.begin() + l2);
  int keep_idx = l - (l > l2 ? 1 : 0);
  for (auto& a : assign_)
    if (a.first == j && a.second > l2) --a.second;
  for (int n : cl_[j].xcl[keep_idx].members) assign_[n] = {j, keep_idx};
}

void EdpSampler::pair_b() {
  int kx1p = kx1plus_now();
  std::vector<int> kjv = kj_vector();
  int kx2 = kx2plus_of(kjv);
  bool can_ds = kx1p > 0, can_sm = kx2 > 0;
  if (!can_ds && !can_sm) return;
  double w_ds = can_ds ? (can_sm ? 0.5 : 1.0) : 0.0;
  double w_sm = can_sm ? (can_ds ? 0.5 : 1.0) : 0.0;
  bool do_ds = can_ds && (!can_sm || rng_.uniform() < 0.5);

  if (do_ds) {
    // dumb split: fair-coin reallocation of one multi-member x-cluster
    std::vector<std::pair<int, int>> cands;
    for (size_t j = 0; j < cl_.size(); ++j)
      for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
        if (cl_[j].xcl[l].members.size() > 1)
          cands.push_back({static_cast<int>(j), static_cast<int>(l)});
    auto [j, l] = cands[rng_.uniform_int(static_cast<int>(cands.size()))];
    std::vector<int> order = sorted_members(cl_[j].xcl[l].members);
    XStats sa, sb;
    sa.init(data_);
    sb.init(data_);
    std::vector<int> la, lb;
    for (int n : order) {
      if (rng_.uniform() < 0.5) {
        sa.add(data_, n);
        la.push_back(n);
      } else {
        sb.add(data_, n);
        lb.push_back(n);
      }
    }
    ++stats_.dumb_split.proposed;
    if (la.empty() || lb.empty()) {
      ++stats_.dumb_split.accepted;  // degenerate proposal, stay put
      return;
    }
    double NA = static_cast<double>(la.size()), NB = static_cast<double>(lb.size());
    double N = NA + NB;
    double log_hl = log_joint_x(data_, cl_[j].xcl[l].stats);
    double log_target = std::log(cl_[j].alpha_psi) + std::lgamma(NA) + std::lgamma(NB) -
                        std::lgamma(N) + log_joint_x(data_, sa) + log_joint_x(data_, sb) -
                        log_hl;
    double logq_ds = -std::log((double)kx1p) + (1.0 - N) * std::log(2.0);

    // reverse smart merge in the split state: partner sums within y-cluster j
    std::vector<double> sums_a, sums_b;  // log h of pairwise unions
    for (size_t l3 = 0; l3 < cl_[j].xcl.size(); ++l3) {
      if (l3 == static_cast<size_t>(l)) continue;
      XStats u = sa;
      u.merge(cl_[j].xcl[l3].stats);
      sums_a.push_back(log_joint_x(data_, u));
      XStats v = sb;
      v.merge(cl_[j].xcl[l3].stats);
      sums_b.push_back(log_joint_x(data_, v));
    }
    sums_a.push_back(log_hl);  // union of the two halves = original cluster
    sums_b.push_back(log_hl);
    double t1 = log_hl - log_sum_exp(sums_a);
    double t2 = log_hl - log_sum_exp(sums_b);
    std::vector<int> kjp = kjv;
    ++kjp[j];
    int kx2s = kx2plus_of(kjp);
    double logq_sm_rev = -std::log((double)kx2s) + log_sum_exp(t1, t2);
    int kx1ps = kx1p - 1 + (la.size() > 1 ? 1 : 0) + (lb.size() > 1 ? 1 : 0);
    double w_sm_s = (kx1ps == 0) ? 1.0 : 0.5;
    double logp = log_target + logq_sm_rev - logq_ds + std::log(w_sm_s) -
                  std::log(w_ds);
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.dumb_split.accepted;
      cl_[j].xcl[l].members = la;
      cl_[j].xcl[l].stats = sa;
      XCl xb;
      xb.members = lb;
      xb.stats = sb;
      int newl = static_cast<int>(cl_[j].xcl.size());
      cl_[j].xcl.push_back(std::move(xb));
      for (int n : lb) assign_[n] = {j, newl};
      for (int n : la) assign_[n] = {j, l};
    }
  } else {
    // smart merge: partner chosen by the joint marginal of the pooled cluster
    std::vector<std::pair<int, int>> blocks;
    for (size_t j = 0; j < cl_.size(); ++j)
      if (cl_[j].xcl.size() >= 2)
        for (size_t l = 0; l < cl_[j].xcl.size(); ++l)
          blocks.push_back({static_cast<int>(j), static_cast<int>(l)});
    auto [j, l] = blocks[rng_.uniform_int(static_cast<int>(blocks.size()))];
    int kj = static_cast<int>(cl_[j].xcl.size());

    std::vector<double> pw;
    std::vector<int> pidx;
    for (int l3 = 0; l3 < kj; ++l3) {
      if (l3 == l) continue;
      XStats u = cl_[j].xcl[l].stats;
      u.merge(cl_[j].xcl[l3].stats);
      pw.push_back(log_joint_x(data_, u));
      pidx.push_back(l3);
    }
    double lse_a = log_sum_exp(pw);
    int l2 = pidx[rng_.categorical_log(pw)];

    std::vector<double> pw2;
    for (int l3 = 0; l3 < kj; ++l3) {
      if (l3 == l2) continue;
      XStats u = cl_[j].xcl[l2].stats;
      u.merge(cl_[j].xcl[l3].stats);
      pw2.push_back(log_joint_x(data_, u));
    }
    double lse_b = log_sum_exp(pw2);

    const XCl& A = cl_[j].xcl[l];
    const XCl& B = cl_[j].xcl[l2];
    XStats sm = A.stats;
    sm.merge(B.stats);
    double log_hm = log_joint_x(data_, sm);
    double NA = static_cast<double>(A.members.size());
    double NB = static_cast<double>(B.members.size());
    double NM = NA + NB;
    double log_target = std::lgamma(NM) + log_hm - std::log(cl_[j].alpha_psi) -
                        std::lgamma(NA) - std::lgamma(NB) -
                        log_joint_x(data_, A.stats) - log_joint_x(data_, B.stats);
    double logq_sm_fwd =
        -std::log((double)kx2) + log_sum_exp(log_hm - lse_a, log_hm - lse_b);
    int kx1ps = kx1p - (A.members.size() > 1 ? 1 : 0) - (B.members.size() > 1 ? 1 : 0) + 1;
    double logq_ds_rev = -std::log((double)kx1ps) + (1.0 - NM) * std::log(2.0);
    std::vector<int> kjp = kjv;
    --kjp[j];
    int kx2s = kx2plus_of(kjp);
    double w_ds_s = (kx2s == 0) ? 1.0 : 0.5;
    double logp = log_target + logq_ds_rev - logq_sm_fwd + std::log(w_ds_s) -
                  std::log(w_sm);
    ++stats_.smart_merge.proposed;
    if (std::log(rng_.uniform()) < logp) {
      ++stats_.smart_merge.accepted;
      merge_x_clusters(j, l, l2);
    }
  }
}

// ---------------------------------------------------------------------------
// expert parameters via HMC in unconstrained coordinates

namespace {
struct HmcTarget {
  const PriorConfig& priors;
  bool sigma2_fixed;
  const MatrixXd& X;
  const VectorXd& y;
  int D;

  double value_grad(const VectorXd& eta, VectorXd* grad) const {
    // a diverged leapfrog can run eta past exp() overflow; call that zero
    // density instead of feeding non-finite kernels to the factorisation
    if (!eta.allFinite() || eta.cwiseAbs().maxCoeff() > 40.0) {
      grad->setZero(eta.size());
      return kNegInf;
    }
    ExpertParams p = expert_from_eta(eta, D);
    VectorXd glik;
    double v = gp_log_marginal_value_grad(p, X, y, &glik);
    v += expert_prior_logpdf_eta(priors, p, sigma2_fixed);
    *grad = glik + expert_prior_grad_eta(priors, p, sigma2_fixed);
    if (sigma2_fixed) (*grad)[0] = 0.0;
    return v;
  }
};
}  // namespace

void EdpSampler::update_experts() {
  if (experts_frozen_ || !opts_.update_experts) return;
  const int D = data_.dim();
  double acc_sum = 0.0;
  int acc_n = 0;
  for (size_t j = 0; j < cl_.size(); ++j) {
    YCl& c = cl_[j];
    HmcTarget target{priors_, sigma2_fixed_, c.gp.xm(), c.gp.ym(), D};
    VectorXd eta = expert_to_eta(c.params);
    VectorXd grad;
    double logp0 = target.value_grad(eta, &grad);
    VectorXd mom(eta.size());
    for (int i = 0; i < mom.size(); ++i) mom[i] = rng_.normal();
    if (sigma2_fixed_) mom[0] = 0.0;
    double h0 = -logp0 + 0.5 * mom.squaredNorm();

    VectorXd eta1 = eta, g1 = grad;
    double logp1 = logp0;
    bool diverged = false;
    for (int s = 0; s < opts_.hmc_steps; ++s) {
      mom += 0.5 * hmc_eps_ * g1;
      eta1 += hmc_eps_ * mom;
      logp1 = target.value_grad(eta1, &g1);
      if (!std::isfinite(logp1)) { diverged = true; break; }
      mom += 0.5 * hmc_eps_ * g1;
    }
    double a = 0.0;
    if (!diverged) {
      double h1 = -logp1 + 0.5 * mom.squaredNorm();
      double dh = h1 - h0;
      if (std::isfinite(dh) && dh < 1000.0) a = std::min(1.0, std::exp(-dh));
    }
    ++stats_.hmc.proposed;
    if (a > 0.0 && rng_.uniform() < a) {
      ++stats_.hmc.accepted;
      c.params = expert_from_eta(eta1, D);
      auto rows = c.gp.rows();
      c.gp.rebuild(c.params, data_, latent_, std::move(rows));
    }
    acc_sum += a;
    ++acc_n;
  }
  if (hmc_adapting_ && acc_n > 0) {
    // dual averaging (Hoffman & Gelman 2014), target opts_.hmc_target_accept
    const double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    ++hmc_adapt_t_;
    double abar = acc_sum / acc_n;
    double frac = 1.0 / (hmc_adapt_t_ + t0);
    hmc_hbar_ = (1.0 - frac) * hmc_hbar_ + frac * (opts_.hmc_target_accept - abar);
    double log_eps = hmc_mu_ - std::sqrt((double)hmc_adapt_t_) / gamma * hmc_hbar_;
    double w = std::pow((double)hmc_adapt_t_, -kappa);
    hmc_log_eps_bar_ = w * log_eps + (1.0 - w) * hmc_log_eps_bar_;
    hmc_eps_ = std::exp(log_eps);
  }
}

// ---------------------------------------------------------------------------
// concentration parameters (auxiliary-variable Gamma mixture updates)

void EdpSampler::update_concentrations() {
  if (conc_frozen_ || !opts_.update_concentrations) return;
  const double N = data_.n();
  const double k = static_cast<double>(cl_.size());
  double xi = rng_.beta(alpha_theta_ + 1.0, N);
  double vhat = priors_.v_theta - std::log(xi);
  double lower = priors_.u_theta + k - 1.0;
  double p_low = N * vhat / (N * vhat + lower);
  double shape = (rng_.uniform() < p_low) ? lower : lower + 1.0;
  alpha_theta_ = rng_.gamma(shape, vhat);

  if (opts_.dp_mode) return;
  for (auto& c : cl_) {
    double nj = c.size();
    double kj = static_cast<double>(c.xcl.size());
    double xj = rng_.beta(c.alpha_psi + 1.0, nj);
    double vh = priors_.v_psi - std::log(xj);
    double lo = priors_.u_psi + kj - 1.0;
    double pl = nj * vh / (nj * vh + lo);
    double sh = (rng_.uniform() < pl) ? lo : lo + 1.0;
    c.alpha_psi = rng_.gamma(sh, vh);
  }
}

// ---------------------------------------------------------------------------
// latent ordinal outputs: single-site Gibbs on the joint Gaussian

std::pair<double, double> EdpSampler::latent_interval(int n) const {
  const auto& eps = data_.cutoffs;
  const int L = data_.ordinal_levels;
  int yi = static_cast<int>(data_.y[n]);
  double lo = (yi == 0) ? -std::numeric_limits<double>::infinity() : eps[yi - 1];
  double hi = (yi == L) ? std::numeric_limits<double>::infinity() : eps[yi];
  return {lo, hi};
}

void EdpSampler::update_latent_outputs() {
  if (data_.output != OutputKind::OrdinalProbit || !opts_.update_latent) return;
  for (auto& c : cl_) {
    const int m = c.size();
    if (m == 0) continue;
    MatrixXd P = c.gp.chol().inverse();
    VectorXd ym = c.gp.ym();
    VectorXd v = P * (ym.array() - c.params.beta0).matrix();
    for (int i = 0; i < m; ++i) {
      double var = 1.0 / P(i, i);
      double sd = std::sqrt(var);
      double mean = ym[i] - v[i] * var;
      int n = c.gp.rows()[i];
      auto [lo, hi] = latent_interval(n);
      double t = rng_.truncated_std_normal((lo - mean) / sd, (hi - mean) / sd);
      double ynew = mean + sd * t;
      double delta = ynew - ym[i];
      ym[i] = ynew;
      v += delta * P.col(i);
      latent_[n] = ynew;
    }
    c.gp.refresh_latent(c.params, latent_);
  }
}

// ---------------------------------------------------------------------------

void EdpSampler::step() {
  rebuild_caches();
  gibbs_sweep();
  if (!opts_.dp_mode && opts_.enable_y_moves) y_moves();
  if (!opts_.dp_mode && opts_.enable_split_merge) split_merge_moves();
  update_experts();
  update_concentrations();
  update_latent_outputs();
}

PosteriorDraws EdpSampler::run() {
  if (cl_.empty()) init_from_prior();
  PosteriorDraws out;
  out.dp_mode = opts_.dp_mode;
  hmc_adapting_ = opts_.burn_in > 0;
  for (long it = 1; it <= opts_.iters; ++it) {
    if (it == opts_.burn_in + 1 && hmc_adapting_) {
      hmc_adapting_ = false;
      if (hmc_adapt_t_ > 0) hmc_eps_ = std::exp(hmc_log_eps_bar_);
    }
    step();
    if (on_iteration) on_iteration(it);
    if (it > opts_.burn_in && (it - opts_.burn_in) % opts_.thin == 0) {
      out.states.push_back(state());
      out.iters.push_back(it);
    }
  }
  out.stats = stats_;
  return out;
}

}  // namespace emoe

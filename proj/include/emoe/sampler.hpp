// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "emoe/gp.hpp"
#include "emoe/input_models.hpp"
#include "emoe/priors.hpp"
#include "emoe/rng.hpp"
#include "emoe/types.hpp"

namespace emoe {

struct SamplerOptions {
  long iters = 5000;
  long burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool dp_mode = false;  // force one x-cluster per y-cluster, plain DP weights
  int m_aux = 3;         // fresh-cluster candidates per Gibbs scan

  // kernel component toggles, used by the exactness checks
  bool enable_y_moves = true;
  bool enable_split_merge = true;
  bool update_experts = true;
  bool update_concentrations = true;
  bool update_latent = true;

  // Move 2 ratio with the unstarred singleton count, for sensitivity runs
  bool move2_ratio_as_printed = false;

  int hmc_steps = 10;
  double hmc_step0 = 0.1;
  double hmc_target_accept = 0.8;

  void validate() const;
};

struct MoveCounter {
  long proposed = 0, accepted = 0;
};

struct MoveStats {
  MoveCounter move1, move2, move3;
  MoveCounter smart_split, dumb_merge, dumb_split, smart_merge;
  MoveCounter hmc;
  long gibbs_scans = 0, gibbs_reassigned = 0;
};

struct PosteriorDraws {
  std::vector<SamplerState> states;
  std::vector<long> iters;
  MoveStats stats;
  bool dp_mode = false;
};

class EdpSampler {
 public:
  EdpSampler(const Dataset& data, const PriorConfig& priors, SamplerOptions opts);

  void init_from_prior();
  void set_state(const SamplerState& s);

  // point-mass "priors" for the expert parameters / concentrations; new
  // clusters then reuse the template values and the corresponding parameter
  // updates are skipped (partition-exactness checks)
  void freeze_experts(const ExpertParams& tmpl);
  void freeze_concentrations(double alpha_theta, double alpha_psi);

  // one full iteration of the kernel
  void step();
  // kernel components, exposed for unit checks
  void gibbs_sweep();
  void y_moves();
  void split_merge_moves();
  void update_experts();
  void update_concentrations();
  void update_latent_outputs();

  PosteriorDraws run();

  SamplerState state() const;  // canonical-label snapshot
  // throws if the internal caches disagree with the assignment table
  void audit_consistency() const;
  const MoveStats& stats() const { return stats_; }
  Rng& rng() { return rng_; }
  double hmc_step_size() const { return hmc_eps_; }

  std::function<void(long)> on_iteration;  // called after every iteration of run()

 private:
  struct XCl {
    std::vector<int> members;  // insertion order
    XStats stats;
  };
  struct YCl {
    ExpertParams params;
    double alpha_psi = 1.0;
    GpCluster gp;
    std::vector<XCl> xcl;
    int size() const { return gp.size(); }
  };

  void rebuild_caches();
  void remove_point(int n, bool* removed_singleton_y, ExpertParams* retained,
                    double* retained_alpha);
  void insert_existing(int n, int j, int l);
  void insert_new_x(int n, int j);
  void insert_new_y(int n, const ExpertParams& params, double alpha_psi);
  void apply_block_move(int j, int l, int h);  // move x-cluster l of j into h
  void merge_x_clusters(int j, int l, int l2);  // pool l2 into l within j
  double log_hy_point(int n, const YCl& c) const;
  double log_hy_fresh(int n, const ExpertParams& p) const;

  void move1();
  void move23();
  void pair_a();  // smart split / dumb merge
  void pair_b();  // dumb split / smart merge

  // counts over a hypothetical set of per-cluster x-cluster tallies
  static int kx2plus_of(const std::vector<int>& kj);
  static int kx1_of(const std::vector<int>& kj);
  std::vector<int> kj_vector() const;
  int kx1plus_now() const;

  std::pair<double, double> latent_interval(int n) const;

  const Dataset& data_;
  PriorConfig priors_;
  SamplerOptions opts_;
  Rng rng_;

  std::vector<YCl> cl_;
  std::vector<std::pair<int, int>> assign_;  // row -> (y index, x index)
  Eigen::VectorXd latent_;
  double alpha_theta_ = 1.0;

  bool sigma2_fixed_ = false;  // Bernoulli probit: unit noise scale

  bool experts_frozen_ = false;
  ExpertParams expert_template_;
  bool conc_frozen_ = false;
  double frozen_alpha_theta_ = 1.0, frozen_alpha_psi_ = 1.0;

  // dual-averaged HMC step size, adapted during burn-in
  double hmc_eps_ = 0.1, hmc_log_eps_bar_ = 0.0, hmc_hbar_ = 0.0, hmc_mu_ = 0.0;
  long hmc_adapt_t_ = 0;
  bool hmc_adapting_ = true;

  MoveStats stats_;
};

}  // namespace emoe

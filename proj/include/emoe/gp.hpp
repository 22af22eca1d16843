// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>

#include "emoe/types.hpp"

namespace emoe {

// ARD squared-exponential kernel k(a,b) = sf2 * exp(-0.5 sum_d (a_d-b_d)^2/ell_d^2)
double kernel(const ExpertParams& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::MatrixXd kernel_matrix(const ExpertParams& p, const Eigen::MatrixXd& X);
Eigen::VectorXd kernel_cross(const ExpertParams& p, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& xstar);

// Lower-triangular Cholesky factor of a PSD matrix with incremental
// append/drop. Jitter starts at 1e-10 * mean diagonal and escalates by
// factors of 10 up to 1e-4 * mean diagonal before throwing.
struct CholFactor {
  Eigen::MatrixXd L;   // n x n lower triangular
  double jitter = 0.0; // diagonal shift applied at the last full build
  int n = 0;

  static CholFactor build(const Eigen::MatrixXd& A);

  // append a row/column with cross covariances a and diagonal d;
  // returns false if the new pivot is not positive (caller rebuilds)
  bool append(const Eigen::VectorXd& a, double d);
  // drop row/column i (rank-one update of the trailing block)
  void drop(int i);

  Eigen::VectorXd solve_lower(const Eigen::VectorXd& v) const;  // L^{-1} v
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;        // (L L^T)^{-1} v
  Eigen::MatrixXd inverse() const;                              // (L L^T)^{-1}
  double half_logdet() const;  // sum log L_ii
};

struct GpPrediction {
  double mean = 0.0;
  double var = 0.0;  // includes the sigma2 noise floor
};

// log N(y | beta0 1, sigma2 I + K(X)); empty y gives 0
double gp_log_marginal(const ExpertParams& p, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y);

// log density of the block yb given yo under the joint marginal; empty
// conditioning set reduces to gp_log_marginal of the block
double gp_log_conditional_block(const ExpertParams& p, const Eigen::MatrixXd& Xb,
                                const Eigen::VectorXd& yb, const Eigen::MatrixXd& Xo,
                                const Eigen::VectorXd& yo);

GpPrediction gp_predict(const ExpertParams& p, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& xstar);

// gradient of gp_log_marginal in the unconstrained coordinates
// eta = (log sigma2, beta0, log sf2, log ell_1..log ell_D)
Eigen::VectorXd gp_log_marginal_grad_eta(const ExpertParams& p, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y);

// value and gradient from a single factorisation
double gp_log_marginal_value_grad(const ExpertParams& p, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, Eigen::VectorXd* grad);

// Per-y-cluster cache: member rows, the factor of A = sigma2 I + K over the
// members, and w = A^{-1}(ytilde - beta0 1). add/remove are O(m^2).
class GpCluster {
 public:
  const std::vector<int>& rows() const { return rows_; }
  int size() const { return static_cast<int>(rows_.size()); }
  const Eigen::MatrixXd& xm() const { return xm_; }
  const Eigen::VectorXd& ym() const { return ym_; }

  void rebuild(const ExpertParams& p, const Dataset& data, const Eigen::VectorXd& latent,
               std::vector<int> rows);
  void add_row(const ExpertParams& p, const Dataset& data, const Eigen::VectorXd& latent,
               int row);
  void remove_row(const ExpertParams& p, const Dataset& data, const Eigen::VectorXd& latent,
                  int row);
  // refresh ym and w after latent outputs changed (members unchanged)
  void refresh_latent(const ExpertParams& p, const Eigen::VectorXd& latent);

  double log_marginal_cached(const ExpertParams& p) const;
  GpPrediction predict(const ExpertParams& p, const Eigen::VectorXd& xstar) const;
  // log density of a block given the cached members
  double log_conditional_block(const ExpertParams& p, const Eigen::MatrixXd& Xb,
                               const Eigen::VectorXd& yb) const;

  const CholFactor& chol() const { return chol_; }
  const Eigen::VectorXd& w() const { return w_; }

 private:
  void refresh_w(const ExpertParams& p);
  std::vector<int> rows_;
  Eigen::MatrixXd xm_;  // members x D
  Eigen::VectorXd ym_;
  CholFactor chol_;
  Eigen::VectorXd w_;
};

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/gp.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "emoe/math.hpp"

namespace emoe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double kernel(const ExpertParams& p, const VectorXd& a, const VectorXd& b) {
  double q = 0.0;
  for (int d = 0; d < a.size(); ++d) {
    double t = (a[d] - b[d]) / p.ell[d];
    q += t * t;
  }
  return p.sf2 * std::exp(-0.5 * q);
}

MatrixXd kernel_matrix(const ExpertParams& p, const MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = p.sf2;
    for (int j = 0; j < i; ++j) {
      double q = 0.0;
      for (int d = 0; d < X.cols(); ++d) {
        double t = (X(i, d) - X(j, d)) / p.ell[d];
        q += t * t;
      }
      K(i, j) = K(j, i) = p.sf2 * std::exp(-0.5 * q);
    }
  }
  return K;
}

VectorXd kernel_cross(const ExpertParams& p, const MatrixXd& X, const VectorXd& xstar) {
  VectorXd k(X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    double q = 0.0;
    for (int d = 0; d < X.cols(); ++d) {
      double t = (X(i, d) - xstar[d]) / p.ell[d];
      q += t * t;
    }
    k[i] = p.sf2 * std::exp(-0.5 * q);
  }
  return k;
}

CholFactor CholFactor::build(const MatrixXd& A) {
  CholFactor f;
  f.n = static_cast<int>(A.rows());
  if (f.n == 0) {
    f.L.resize(0, 0);
    return f;
  }
  double mean_diag = A.diagonal().mean();
  if (!std::isfinite(mean_diag) || !(mean_diag > 0.0) || !A.allFinite())
    throw std::runtime_error("CholFactor: matrix is non-finite or has non-positive scale");
  double jit = 0.0;
  for (;;) {
    MatrixXd Aj = A;
    if (jit > 0.0) Aj.diagonal().array() += jit;
    Eigen::LLT<MatrixXd> llt(Aj);
    if (llt.info() == Eigen::Success) {
      f.L = llt.matrixL();
      f.jitter = jit;
      return f;
    }
    jit = (jit == 0.0) ? 1e-10 * mean_diag : 10.0 * jit;
    if (jit > 1e-4 * mean_diag)
      throw std::runtime_error("CholFactor: matrix not positive definite after max jitter");
  }
}

bool CholFactor::append(const VectorXd& a, double d) {
  assert(a.size() == n);
  VectorXd l = solve_lower(a);
  double d2 = d + jitter - l.squaredNorm();
  if (!(d2 > 0.0) || !std::isfinite(d2)) return false;
  L.conservativeResize(n + 1, n + 1);
  L.row(n).head(n) = l.transpose();
  L.col(n).setZero();
  L(n, n) = std::sqrt(d2);
  ++n;
  return true;
}

void CholFactor::drop(int i) {
  assert(i >= 0 && i < n);
  const int m = n - i - 1;  // trailing block size
  if (m > 0) {
    // factor of the trailing block after removal: chol(L33 L33' + l32 l32')
    VectorXd v = L.col(i).tail(m);
    // rank-one update of the trailing lower-triangular block, LINPACK style
    for (int kcol = 0; kcol < m; ++kcol) {
      int r = i + 1 + kcol;
      double lkk = L(r, r);
      double rad = std::hypot(lkk, v[kcol]);
      double cos = rad / lkk, sin = v[kcol] / lkk;
      L(r, r) = rad;
      for (int irow = kcol + 1; irow < m; ++irow) {
        int rr = i + 1 + irow;
        L(rr, r) = (L(rr, r) + sin * v[irow]) / cos;
        v[irow] = cos * v[irow] - sin * L(rr, r);
      }
    }
  }
  // shift rows/cols up-left over the removed index
  for (int r = i; r < n - 1; ++r)
    for (int c = 0; c <= r; ++c)
      L(r, c) = (c < i) ? L(r + 1, c) : L(r + 1, c + 1);
  --n;
  L.conservativeResize(n, n);
}

VectorXd CholFactor::solve_lower(const VectorXd& v) const {
  if (n == 0) return VectorXd(0);
  return L.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(v);
}

VectorXd CholFactor::solve(const VectorXd& v) const {
  if (n == 0) return VectorXd(0);
  VectorXd t = solve_lower(v);
  return L.topLeftCorner(n, n).transpose().triangularView<Eigen::Upper>().solve(t);
}

MatrixXd CholFactor::inverse() const {
  if (n == 0) return MatrixXd(0, 0);
  MatrixXd Linv = L.topLeftCorner(n, n)
                      .triangularView<Eigen::Lower>()
                      .solve(MatrixXd::Identity(n, n));
  return Linv.transpose() * Linv;
}

double CholFactor::half_logdet() const {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::log(L(i, i));
  return s;
}

double gp_log_marginal(const ExpertParams& p, const MatrixXd& X, const VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n == 0) return 0.0;
  MatrixXd A = kernel_matrix(p, X);
  A.diagonal().array() += p.sigma2;
  CholFactor f = CholFactor::build(A);
  VectorXd r = y.array() - p.beta0;
  VectorXd t = f.solve_lower(r);
  return -0.5 * n * kLog2Pi - f.half_logdet() - 0.5 * t.squaredNorm();
}

double gp_log_conditional_block(const ExpertParams& p, const MatrixXd& Xb,
                                const VectorXd& yb, const MatrixXd& Xo,
                                const VectorXd& yo) {
  if (yo.size() == 0) return gp_log_marginal(p, Xb, yb);
  MatrixXd Ao = kernel_matrix(p, Xo);
  Ao.diagonal().array() += p.sigma2;
  CholFactor f = CholFactor::build(Ao);
  const int nb = static_cast<int>(yb.size());
  MatrixXd Kob(Xo.rows(), nb);
  for (int j = 0; j < nb; ++j)
    Kob.col(j) = kernel_cross(p, Xo, Xb.row(j).transpose());
  MatrixXd V = f.L.triangularView<Eigen::Lower>().solve(Kob);
  VectorXd ro = yo.array() - p.beta0;
  VectorXd t = f.solve_lower(ro);
  VectorXd mb = VectorXd::Constant(nb, p.beta0) + V.transpose() * t;
  MatrixXd Sb = kernel_matrix(p, Xb) - V.transpose() * V;
  Sb.diagonal().array() += p.sigma2;
  CholFactor fb = CholFactor::build(Sb);
  VectorXd rb = fb.solve_lower(yb - mb);
  return -0.5 * nb * kLog2Pi - fb.half_logdet() - 0.5 * rb.squaredNorm();
}

GpPrediction gp_predict(const ExpertParams& p, const MatrixXd& X, const VectorXd& y,
                        const VectorXd& xstar) {
  GpPrediction out;
  if (y.size() == 0) {
    out.mean = p.beta0;
    out.var = p.sigma2 + p.sf2;
    return out;
  }
  MatrixXd A = kernel_matrix(p, X);
  A.diagonal().array() += p.sigma2;
  CholFactor f = CholFactor::build(A);
  VectorXd ks = kernel_cross(p, X, xstar);
  VectorXd r = y.array() - p.beta0;
  VectorXd lk = f.solve_lower(ks);
  VectorXd lr = f.solve_lower(r);
  out.mean = p.beta0 + lk.dot(lr);
  out.var = p.sigma2 + p.sf2 - lk.squaredNorm();
  if (out.var < 1e-12 * (p.sigma2 + p.sf2)) out.var = 1e-12 * (p.sigma2 + p.sf2);
  return out;
}

double gp_log_marginal_value_grad(const ExpertParams& p, const MatrixXd& X,
                                  const VectorXd& y, VectorXd* grad) {
  const int n = static_cast<int>(y.size());
  const int D = static_cast<int>(p.ell.size());
  grad->setZero(3 + D);
  if (n == 0) return 0.0;
  MatrixXd K = kernel_matrix(p, X);
  MatrixXd A = K;
  A.diagonal().array() += p.sigma2;
  CholFactor f = CholFactor::build(A);
  VectorXd r = y.array() - p.beta0;
  VectorXd alpha = f.solve(r);
  double value = -0.5 * n * kLog2Pi - f.half_logdet() - 0.5 * r.dot(alpha);
  MatrixXd Ainv = f.inverse();
  VectorXd& g = *grad;
  // d/d log sigma2
  g[0] = 0.5 * p.sigma2 * (alpha.squaredNorm() - Ainv.trace());
  // d/d beta0
  g[1] = alpha.sum();
  // W = Ainv - alpha alpha^T; d/dtheta = -1/2 tr(W dA/dtheta)
  // d/d log sf2: dA/dlog sf2 = K
  double trAinvK = (Ainv.array() * K.array()).sum();
  double aKa = alpha.dot(K * alpha);
  g[2] = -0.5 * (trAinvK - aKa);
  // d/d log ell_d: dK_pq * delta_d^2 / ell_d^2
  MatrixXd M = (Ainv - alpha * alpha.transpose()).cwiseProduct(K);
  for (int d = 0; d < D; ++d) {
    double acc = 0.0;
    double inv2 = 1.0 / (p.ell[d] * p.ell[d]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double dd = X(i, d) - X(j, d);
        acc += M(i, j) * dd * dd;
      }
    g[3 + d] = -0.5 * acc * inv2;
  }
  return value;
}

VectorXd gp_log_marginal_grad_eta(const ExpertParams& p, const MatrixXd& X,
                                  const VectorXd& y) {
  VectorXd g;
  gp_log_marginal_value_grad(p, X, y, &g);
  return g;
}

void GpCluster::rebuild(const ExpertParams& p, const Dataset& data,
                        const VectorXd& latent, std::vector<int> rows) {
  rows_ = std::move(rows);
  const int m = static_cast<int>(rows_.size());
  xm_.resize(m, data.dim());
  ym_.resize(m);
  for (int i = 0; i < m; ++i) {
    xm_.row(i) = data.x.row(rows_[i]);
    ym_[i] = latent[rows_[i]];
  }
  MatrixXd A = kernel_matrix(p, xm_);
  A.diagonal().array() += p.sigma2;
  chol_ = CholFactor::build(A);
  refresh_w(p);
}

void GpCluster::add_row(const ExpertParams& p, const Dataset& data,
                        const VectorXd& latent, int row) {
  VectorXd xnew = data.x.row(row).transpose();
  VectorXd a = kernel_cross(p, xm_, xnew);
  if (!chol_.append(a, p.sf2 + p.sigma2)) {
    rows_.push_back(row);
    auto r = rows_;
    rebuild(p, data, latent, std::move(r));
    return;
  }
  const int m = size();
  rows_.push_back(row);
  xm_.conservativeResize(m + 1, Eigen::NoChange);
  xm_.row(m) = data.x.row(row);
  ym_.conservativeResize(m + 1);
  ym_[m] = latent[row];
  refresh_w(p);
}

void GpCluster::remove_row(const ExpertParams& p, const Dataset& data,
                           const VectorXd& latent, int row) {
  (void)data;
  (void)latent;
  int i = -1;
  for (size_t t = 0; t < rows_.size(); ++t)
    if (rows_[t] == row) { i = static_cast<int>(t); break; }
  assert(i >= 0);
  chol_.drop(i);
  const int m = size();
  for (int t = i; t + 1 < m; ++t) {
    rows_[t] = rows_[t + 1];
    xm_.row(t) = xm_.row(t + 1);
    ym_[t] = ym_[t + 1];
  }
  rows_.pop_back();
  xm_.conservativeResize(m - 1, Eigen::NoChange);
  ym_.conservativeResize(m - 1);
  refresh_w(p);
}

void GpCluster::refresh_latent(const ExpertParams& p, const VectorXd& latent) {
  for (int i = 0; i < size(); ++i) ym_[i] = latent[rows_[i]];
  refresh_w(p);
}

void GpCluster::refresh_w(const ExpertParams& p) {
  if (size() == 0) {
    w_.resize(0);
    return;
  }
  VectorXd r = ym_.array() - p.beta0;
  w_ = chol_.solve(r);
}

double GpCluster::log_marginal_cached(const ExpertParams& p) const {
  const int m = size();
  if (m == 0) return 0.0;
  VectorXd r = ym_.array() - p.beta0;
  return -0.5 * m * kLog2Pi - chol_.half_logdet() - 0.5 * r.dot(w_);
}

GpPrediction GpCluster::predict(const ExpertParams& p, const VectorXd& xstar) const {
  GpPrediction out;
  if (size() == 0) {
    out.mean = p.beta0;
    out.var = p.sigma2 + p.sf2;
    return out;
  }
  VectorXd ks = kernel_cross(p, xm_, xstar);
  out.mean = p.beta0 + ks.dot(w_);
  VectorXd lk = chol_.solve_lower(ks);
  out.var = p.sigma2 + p.sf2 - lk.squaredNorm();
  if (out.var < 1e-12 * (p.sigma2 + p.sf2)) out.var = 1e-12 * (p.sigma2 + p.sf2);
  return out;
}

double GpCluster::log_conditional_block(const ExpertParams& p, const MatrixXd& Xb,
                                        const VectorXd& yb) const {
  if (size() == 0) return gp_log_marginal(p, Xb, yb);
  const int nb = static_cast<int>(yb.size());
  MatrixXd Kob(size(), nb);
  for (int j = 0; j < nb; ++j)
    Kob.col(j) = kernel_cross(p, xm_, Xb.row(j).transpose());
  MatrixXd V =
      chol_.L.topLeftCorner(size(), size()).triangularView<Eigen::Lower>().solve(Kob);
  VectorXd mb = VectorXd::Constant(nb, p.beta0) + Kob.transpose() * w_;
  MatrixXd Sb = kernel_matrix(p, Xb) - V.transpose() * V;
  Sb.diagonal().array() += p.sigma2;
  CholFactor fb = CholFactor::build(Sb);
  VectorXd rb = fb.solve_lower(yb - mb);
  return -0.5 * nb * kLog2Pi - fb.half_logdet() - 0.5 * rb.squaredNorm();
}

}  // namespace emoe

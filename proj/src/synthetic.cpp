// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "emoe/math.hpp"

namespace emoe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void DampedCosineConfig::validate() const {
  if (n < 1 || dim < 1) throw std::invalid_argument("generator: n, dim >= 1");
  if (!(sigma1 > 0) || !(sigma2 > 0)) throw std::invalid_argument("generator: sigmas > 0");
  if (!(tau1 > 0) || !(tau2 > 0)) throw std::invalid_argument("generator: taus > 0");
  if (!(input_var > 0)) throw std::invalid_argument("generator: input_var > 0");
  if (dim > 1 && !(input_var > input_cov))
    throw std::invalid_argument("generator: covariance not positive definite");
}

double DampedCosineConfig::component1_weight(double x1) const {
  double l1 = std::log(tau1) - 0.5 * tau1 * (x1 - mu1) * (x1 - mu1);
  double l2 = std::log(tau2) - 0.5 * tau2 * (x1 - mu2) * (x1 - mu2);
  return std::exp(l1 - log_sum_exp(l1, l2));
}

double DampedCosineConfig::component_mean(int comp, double x1) const {
  double b0 = comp == 1 ? beta10 : beta20;
  double b1 = comp == 1 ? beta11 : beta21;
  return std::exp(b0 * x1) * std::cos(b1 * kPi * x1);
}

double DampedCosineConfig::density(double y, double x1) const {
  double p1 = component1_weight(x1);
  return p1 * std::exp(log_normal_pdf(y, component_mean(1, x1), sigma1 * sigma1)) +
         (1.0 - p1) * std::exp(log_normal_pdf(y, component_mean(2, x1), sigma2 * sigma2));
}

double DampedCosineConfig::mean(double x1) const {
  double p1 = component1_weight(x1);
  return p1 * component_mean(1, x1) + (1.0 - p1) * component_mean(2, x1);
}

std::vector<InputFamilySpec> default_input_specs(const MatrixXd& x) {
  std::vector<InputFamilySpec> specs(x.cols());
  for (int d = 0; d < x.cols(); ++d) {
    specs[d].family = InputFamilySpec::Family::GaussianNig;
    specs[d].u0 = x.col(d).mean();
    specs[d].c = 0.25;
    specs[d].a = 2.0;
    specs[d].b = 1.0;
  }
  return specs;
}

SyntheticData generate_damped_cosine(const DampedCosineConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int D = cfg.dim;

  MatrixXd Sigma = MatrixXd::Constant(D, D, 0.0);
  for (int i = 0; i < D; ++i) Sigma(i, i) = cfg.input_var;
  for (int i = 1; i < D; ++i)
    for (int j = 1; j < D; ++j)
      if (i != j) Sigma(i, j) = cfg.input_cov;
  Eigen::LLT<MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("generator: input covariance factorisation failed");
  MatrixXd L = llt.matrixL();

  SyntheticData out;
  out.data.x.resize(cfg.n, D);
  out.data.y.resize(cfg.n);
  out.component.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    VectorXd z(D);
    for (int d = 0; d < D; ++d) z[d] = rng.normal();
    VectorXd x = VectorXd::Constant(D, cfg.input_mean) + L * z;
    out.data.x.row(i) = x.transpose();
    double p1 = cfg.component1_weight(x[0]);
    int comp = rng.uniform() < p1 ? 1 : 2;
    double sd = comp == 1 ? cfg.sigma1 : cfg.sigma2;
    out.data.y[i] = cfg.component_mean(comp, x[0]) + sd * rng.normal();
    out.component[i] = comp;
  }
  out.data.output = OutputKind::Gaussian;
  out.data.input_spec = default_input_specs(out.data.x);
  return out;
}

int discretize_output(double y, const std::vector<double>& cutoffs) {
  int l = 0;
  while (l < static_cast<int>(cutoffs.size()) && y > cutoffs[l]) ++l;
  return l;
}

}  // namespace emoe

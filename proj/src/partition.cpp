// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/types.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace emoe {

void InputFamilySpec::validate() const {
  switch (family) {
    case Family::GaussianNig:
      if (!(c > 0 && a > 0 && b > 0) || !std::isfinite(u0))
        throw std::invalid_argument("GaussianNig: need c,a,b > 0 and finite u0");
      break;
    case Family::CategoricalDirichlet:
      if (gamma.size() < 2)
        throw std::invalid_argument("CategoricalDirichlet: need >= 2 categories");
      for (double g : gamma)
        if (!(g > 0)) throw std::invalid_argument("CategoricalDirichlet: gamma > 0");
      break;
    case Family::BinomialBeta:
      if (trials < 1 || !(g0 > 0) || !(g1 > 0))
        throw std::invalid_argument("BinomialBeta: need trials >= 1, g0,g1 > 0");
      break;
  }
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw std::invalid_argument("Dataset: x rows != y size");
  if (static_cast<int>(input_spec.size()) != dim())
    throw std::invalid_argument("Dataset: input_spec size != dim");
  for (const auto& s : input_spec) s.validate();
  for (int d = 0; d < dim(); ++d) {
    const auto& s = input_spec[d];
    if (s.family == InputFamilySpec::Family::CategoricalDirichlet) {
      for (int i = 0; i < n(); ++i) {
        double v = x(i, d);
        if (v != std::floor(v) || v < 0 || v >= s.categories())
          throw std::invalid_argument("Dataset: categorical value out of range");
      }
    } else if (s.family == InputFamilySpec::Family::BinomialBeta) {
      for (int i = 0; i < n(); ++i) {
        double v = x(i, d);
        if (v != std::floor(v) || v < 0 || v > s.trials)
          throw std::invalid_argument("Dataset: binomial value out of range");
      }
    }
  }
  if (output == OutputKind::OrdinalProbit) {
    if (ordinal_levels < 1) throw std::invalid_argument("Dataset: ordinal_levels >= 1");
    if (static_cast<int>(cutoffs.size()) != ordinal_levels)
      throw std::invalid_argument("Dataset: need L cutoffs");
    if (cutoffs[0] != 0.0) throw std::invalid_argument("Dataset: cutoffs[0] must be 0");
    for (size_t i = 1; i < cutoffs.size(); ++i)
      if (!(cutoffs[i] > cutoffs[i - 1]))
        throw std::invalid_argument("Dataset: cutoffs must increase");
    for (int i = 0; i < n(); ++i) {
      double v = y[i];
      if (v != std::floor(v) || v < 0 || v > ordinal_levels)
        throw std::invalid_argument("Dataset: ordinal y outside 0..L");
    }
  }
}

std::vector<int> NestedPartition::recount() {
  const int nn = n();
  if (zx.size() != zy.size())
    throw std::invalid_argument("NestedPartition: zy/zx size mismatch");

  std::map<int, int> ymap;  // old y label -> new
  std::vector<int> new2old;
  std::vector<std::map<int, int>> xmaps;
  nj.clear();
  kj.clear();
  nlj.clear();

  for (int i = 0; i < nn; ++i) {
    auto it = ymap.find(zy[i]);
    int j;
    if (it == ymap.end()) {
      j = static_cast<int>(ymap.size());
      ymap.emplace(zy[i], j);
      new2old.push_back(zy[i]);
      xmaps.emplace_back();
      nj.push_back(0);
      nlj.emplace_back();
    } else {
      j = it->second;
    }
    auto& xm = xmaps[j];
    auto xit = xm.find(zx[i]);
    int l;
    if (xit == xm.end()) {
      l = static_cast<int>(xm.size());
      xm.emplace(zx[i], l);
      nlj[j].push_back(0);
    } else {
      l = xit->second;
    }
    zy[i] = j;
    zx[i] = l;
    ++nj[j];
    ++nlj[j][l];
  }
  k = static_cast<int>(nj.size());
  kj.resize(k);
  for (int j = 0; j < k; ++j) kj[j] = static_cast<int>(nlj[j].size());
  return new2old;
}

int NestedPartition::kx2plus() const {
  int c = 0;
  for (int j = 0; j < k; ++j)
    if (kj[j] > 1) c += kj[j];
  return c;
}

int NestedPartition::kx1() const {
  int c = 0;
  for (int j = 0; j < k; ++j)
    if (kj[j] == 1) ++c;
  return c;
}

int NestedPartition::kx1plus() const {
  int c = 0;
  for (int j = 0; j < k; ++j)
    for (int l = 0; l < kj[j]; ++l)
      if (nlj[j][l] > 1) ++c;
  return c;
}

std::string NestedPartition::key() const {
  std::ostringstream os;
  for (size_t i = 0; i < zy.size(); ++i) {
    if (i) os << ' ';
    os << zy[i] << ':' << zx[i];
  }
  return os.str();
}

void ScalarPrior::validate() const {
  switch (kind) {
    case Kind::LogNormal:
      if (!(p2 > 0) || !std::isfinite(p1))
        throw std::invalid_argument("LogNormal prior: sd > 0");
      break;
    case Kind::Gamma:
      if (!(p1 > 0) || !(p2 > 0))
        throw std::invalid_argument("Gamma prior: shape, rate > 0");
      break;
    case Kind::Normal:
      if (!(p2 > 0) || !std::isfinite(p1))
        throw std::invalid_argument("Normal prior: sd > 0");
      break;
  }
}

void PriorConfig::default_lengthscales(int d) {
  lengthscale.assign(d, ScalarPrior{ScalarPrior::Kind::Gamma, 10.0, 0.5});
  if (d > 0) lengthscale[0] = ScalarPrior{ScalarPrior::Kind::Gamma, 3.0, 1.0};
}

void PriorConfig::validate(int d) const {
  sigma2.validate();
  beta0.validate();
  magnitude.validate();
  if (beta0.kind != ScalarPrior::Kind::Normal)
    throw std::invalid_argument("beta0 prior must be Normal");
  if (sigma2.kind == ScalarPrior::Kind::Normal)
    throw std::invalid_argument("sigma2 prior must be LogNormal or Gamma");
  if (magnitude.kind != ScalarPrior::Kind::Gamma)
    throw std::invalid_argument("magnitude prior must be Gamma");
  if (static_cast<int>(lengthscale.size()) != d)
    throw std::invalid_argument("need one length-scale prior per dimension");
  for (const auto& p : lengthscale) {
    p.validate();
    if (p.kind != ScalarPrior::Kind::Gamma)
      throw std::invalid_argument("length-scale priors must be Gamma");
  }
  if (!(u_theta > 0 && v_theta > 0 && u_psi > 0 && v_psi > 0))
    throw std::invalid_argument("concentration Gamma hyperparameters must be > 0");
}

void validate_state(const SamplerState& s, const Dataset& data) {
  NestedPartition p = s.part;
  p.recount();
  if (p.n() != data.n()) throw std::invalid_argument("state: partition size != N");
  if (static_cast<int>(s.experts.size()) != p.k)
    throw std::invalid_argument("state: one expert per y-cluster required");
  if (static_cast<int>(s.conc.alpha_psi.size()) != p.k)
    throw std::invalid_argument("state: one alpha_psi per y-cluster required");
  if (!(s.conc.alpha_theta > 0)) throw std::invalid_argument("state: alpha_theta > 0");
  for (double a : s.conc.alpha_psi)
    if (!(a > 0)) throw std::invalid_argument("state: alpha_psi > 0");
  for (const auto& e : s.experts) {
    if (!(e.sigma2 > 0) || !(e.sf2 > 0))
      throw std::invalid_argument("state: sigma2, sf2 > 0");
    if (e.ell.size() != data.dim())
      throw std::invalid_argument("state: ell size != dim");
    for (int d = 0; d < e.ell.size(); ++d)
      if (!(e.ell[d] > 0)) throw std::invalid_argument("state: ell > 0");
  }
  if (s.latent.size() != data.n())
    throw std::invalid_argument("state: latent size != N");
}

}  // namespace emoe

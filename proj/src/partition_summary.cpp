// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/partition_summary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace emoe {

using Eigen::MatrixXd;

double vi_distance(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vi: size mismatch");
  const double N = static_cast<double>(a.size());
  if (a.empty()) return 0.0;
  std::unordered_map<int, int> ca, cb;
  std::unordered_map<long long, int> cab;
  for (size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++cab[(static_cast<long long>(a[i]) << 32) ^ static_cast<unsigned>(b[i])];
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (const auto& [k, v] : ca) ha -= (v / N) * std::log(v / N);
  for (const auto& [k, v] : cb) hb -= (v / N) * std::log(v / N);
  for (const auto& [k, v] : cab) {
    int la = static_cast<int>(k >> 32);
    int lb = static_cast<int>(k & 0xffffffffLL);
    double pij = v / N;
    mi += pij * std::log(pij / ((ca[la] / N) * (cb[lb] / N)));
  }
  double vi = ha + hb - 2.0 * mi;
  return vi < 0.0 ? 0.0 : vi;  // clamp tiny negative round-off
}

namespace {

// composite nested label (zy, zx) -> one int per point
std::vector<int> nested_labels(const SamplerState& s) {
  std::vector<int> lab(s.part.zy.size());
  for (size_t n = 0; n < lab.size(); ++n)
    lab[n] = s.part.zy[n] * 100000 + s.part.zx[n];
  return lab;
}

double avg_vi_to(const std::vector<int>& cand,
                 const std::vector<std::vector<int>>& all) {
  double s = 0.0;
  for (const auto& p : all) s += vi_distance(cand, p);
  return s / static_cast<double>(all.size());
}

// single-point move sweeps that lower the average VI; stops when a full
// sweep makes no improvement
std::vector<int> greedy_sweeps(std::vector<int> cand,
                               const std::vector<std::vector<int>>& all,
                               int max_sweeps = 3) {
  const int N = static_cast<int>(cand.size());
  double best = avg_vi_to(cand, all);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (int n = 0; n < N; ++n) {
      int orig = cand[n];
      int fresh = *std::max_element(cand.begin(), cand.end()) + 1;
      std::vector<int> tried;
      for (int v : cand)
        if (v != orig && std::find(tried.begin(), tried.end(), v) == tried.end())
          tried.push_back(v);
      tried.push_back(fresh);
      for (int v : tried) {
        cand[n] = v;
        double s = avg_vi_to(cand, all);
        if (s < best - 1e-12) {
          best = s;
          orig = v;
          improved = true;
        }
      }
      cand[n] = orig;
    }
    if (!improved) break;
  }
  return cand;
}

std::vector<int> canonicalize(const std::vector<int>& lab) {
  std::vector<int> out(lab.size());
  std::unordered_map<int, int> seen;
  int next = 0;
  for (size_t i = 0; i < lab.size(); ++i) {
    auto it = seen.find(lab[i]);
    if (it == seen.end()) it = seen.emplace(lab[i], next++).first;
    out[i] = it->second;
  }
  return out;
}

}  // namespace

MatrixXd psm_y(const std::vector<SamplerState>& draws) {
  if (draws.empty()) throw std::invalid_argument("psm: no draws");
  const int N = static_cast<int>(draws[0].part.zy.size());
  MatrixXd m = MatrixXd::Zero(N, N);
  for (const auto& s : draws)
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j)
        if (s.part.zy[i] == s.part.zy[j]) {
          m(i, j) += 1.0;
          m(j, i) = m(i, j);
        }
  m /= static_cast<double>(draws.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

MatrixXd psm_x_within(const std::vector<SamplerState>& draws,
                      const std::vector<int>& members) {
  if (draws.empty()) throw std::invalid_argument("psm: no draws");
  const int M = static_cast<int>(members.size());
  MatrixXd m = MatrixXd::Zero(M, M);
  for (const auto& s : draws)
    for (int i = 0; i < M; ++i)
      for (int j = i; j < M; ++j) {
        int a = members[i], b = members[j];
        if (s.part.zy[a] == s.part.zy[b] && s.part.zx[a] == s.part.zx[b]) m(i, j) += 1.0;
      }
  m /= static_cast<double>(draws.size());
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

PartitionEstimate vi_point_estimate(const std::vector<SamplerState>& draws,
                                    bool greedy_refine) {
  if (draws.empty()) throw std::invalid_argument("vi estimate: no draws");
  const int N = static_cast<int>(draws[0].part.zy.size());
  const int S = static_cast<int>(draws.size());

  std::vector<std::vector<int>> ys(S);
  for (int s = 0; s < S; ++s) ys[s] = draws[s].part.zy;

  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int s = 0; s < S; ++s) {
    double sc = avg_vi_to(ys[s], ys);
    if (sc < best_score) {
      best_score = sc;
      best = s;
    }
  }
  std::vector<int> zy = ys[best];
  if (greedy_refine) {
    zy = greedy_sweeps(std::move(zy), ys);
    best_score = avg_vi_to(zy, ys);
  }
  zy = canonicalize(zy);

  PartitionEstimate est;
  est.zy = zy;
  est.avg_vi = best_score;
  est.k = *std::max_element(zy.begin(), zy.end()) + 1;

  std::vector<double> dist(S);
  for (int s = 0; s < S; ++s) dist[s] = vi_distance(zy, ys[s]);
  std::sort(dist.begin(), dist.end());
  int keep = static_cast<int>(std::ceil(0.95 * S));
  if (keep < 1) keep = 1;
  est.ball_size = dist[keep - 1];

  // nested x-partition per estimated y-cluster, searched over the induced
  // partitions of that cluster's members
  est.zx.assign(N, 0);
  est.kj.assign(est.k, 0);
  for (int j = 0; j < est.k; ++j) {
    std::vector<int> members;
    for (int n = 0; n < N; ++n)
      if (zy[n] == j) members.push_back(n);
    std::vector<std::vector<int>> induced(S);
    for (int s = 0; s < S; ++s) {
      std::vector<int> lab = nested_labels(draws[s]);
      induced[s].resize(members.size());
      for (size_t i = 0; i < members.size(); ++i) induced[s][i] = lab[members[i]];
      induced[s] = canonicalize(induced[s]);
    }
    int bx = 0;
    double bs = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s) {
      double sc = avg_vi_to(induced[s], induced);
      if (sc < bs) {
        bs = sc;
        bx = s;
      }
    }
    std::vector<int> zxj = induced[bx];
    if (greedy_refine) zxj = greedy_sweeps(std::move(zxj), induced);
    zxj = canonicalize(zxj);
    for (size_t i = 0; i < members.size(); ++i) est.zx[members[i]] = zxj[i];
    est.kj[j] = *std::max_element(zxj.begin(), zxj.end()) + 1;
  }
  return est;
}

}  // namespace emoe

// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <vector>

#include "emoe/partition_summary.hpp"
#include "emoe/rng.hpp"
#include "emoe/types.hpp"

using namespace emoe;

namespace {

SamplerState state_of(std::vector<int> zy, std::vector<int> zx) {
  SamplerState s;
  s.part.zy = std::move(zy);
  s.part.zx = std::move(zx);
  s.part.recount();
  return s;
}

std::vector<int> random_partition(Rng& rng, int n) {
  std::vector<int> z(n);
  for (int& v : z) v = rng.uniform_int(4);
  return z;
}

}  // namespace

TEST_CASE("variation of information identities") {
  std::vector<int> a = {0, 0, 1, 1, 2, 2};
  CHECK(vi_distance(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  // relabelling is free
  std::vector<int> b = {7, 7, 3, 3, 9, 9};
  CHECK(vi_distance(a, b) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  // one block against singletons: H = log n
  std::vector<int> one(6, 0), sing = {0, 1, 2, 3, 4, 5};
  CHECK(vi_distance(one, sing) == doctest::Approx(std::log(6.0)).epsilon(1e-13));

  // hand-computed contingency: VI = log 3 - (1/3) log 2
  std::vector<int> u = {0, 0, 0, 1, 1, 1};
  std::vector<int> v = {0, 0, 1, 1, 2, 2};
  CHECK(vi_distance(u, v) ==
        doctest::Approx(std::log(3.0) - std::log(2.0) / 3.0).epsilon(1e-13));
}

TEST_CASE("variation of information is a metric on random partitions") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 3 + rng.uniform_int(6);
    auto a = random_partition(rng, n);
    auto b = random_partition(rng, n);
    auto c = random_partition(rng, n);
    double ab = vi_distance(a, b), ba = vi_distance(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-13));
    CHECK(ab >= -1e-14);
    double ac = vi_distance(a, c), cb = vi_distance(c, b);
    CHECK(ab <= ac + cb + 1e-12);
    // zero only for identical partitions up to labels
    NestedPartition pa, pb;
    pa.zy = a;
    pa.zx.assign(n, 0);
    pb.zy = b;
    pb.zx.assign(n, 0);
    pa.recount();
    pb.recount();
    if (pa.zy == pb.zy)
      CHECK(ab == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
    else
      CHECK(ab > 1e-12);
  }
}

TEST_CASE("posterior similarity matrices count co-clustering frequencies") {
  std::vector<SamplerState> draws = {
      state_of({0, 0, 1, 1}, {0, 1, 0, 0}),
      state_of({0, 0, 0, 1}, {0, 0, 1, 0}),
      state_of({0, 1, 1, 1}, {0, 0, 0, 1}),
  };
  Eigen::MatrixXd P = psm_y(draws);
  REQUIRE(P.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(P(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 4; ++j) {
      CHECK(P(i, j) == doctest::Approx(P(j, i)).epsilon(1e-15));
      CHECK(P(i, j) >= 0.0);
      CHECK(P(i, j) <= 1.0);
    }
  }
  CHECK(P(0, 1) == doctest::Approx(2.0 / 3.0));  // together in draws 1 and 2
  CHECK(P(0, 3) == doctest::Approx(0.0).scale(1.0));
  CHECK(P(2, 3) == doctest::Approx(2.0 / 3.0));

  // joint (y, x) agreement among members {2, 3}
  Eigen::MatrixXd Q = psm_x_within(draws, {2, 3});
  REQUIRE(Q.rows() == 2);
  CHECK(Q(0, 0) == doctest::Approx(1.0));
  // draw 1: same y, different x; draw 2: different y; draw 3: same y, same x
  CHECK(Q(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("the point estimate minimises expected VI over the sampled set") {
  std::vector<SamplerState> draws = {
      state_of({0, 0, 1, 1, 1}, {0, 0, 0, 0, 1}),
      state_of({0, 0, 1, 1, 1}, {0, 0, 0, 1, 1}),
      state_of({0, 0, 0, 1, 1}, {0, 0, 1, 0, 0}),
      state_of({0, 0, 1, 1, 1}, {0, 0, 0, 0, 1}),
      state_of({0, 0, 1, 1, 1}, {0, 0, 0, 0, 1}),
  };
  PartitionEstimate est = vi_point_estimate(draws);
  CHECK(est.k == 2);
  CHECK(est.zy == std::vector<int>{0, 0, 1, 1, 1});

  // the average VI of the winner is the minimum among the sampled y-partitions
  double best = 1e18;
  for (const auto& d : draws) {
    double avg = 0.0;
    for (const auto& e : draws) avg += vi_distance(d.part.zy, e.part.zy);
    best = std::min(best, avg / draws.size());
  }
  CHECK(est.avg_vi == doctest::Approx(best).epsilon(1e-12));

  // ball size: with 5 draws, ceil(0.95 * 5) = 5, the largest distance
  double maxd = 0.0;
  for (const auto& d : draws)
    maxd = std::max(maxd, vi_distance(est.zy, d.part.zy));
  CHECK(est.ball_size == doctest::Approx(maxd).epsilon(1e-12));

  // nested estimate for cluster 1 (members 2,3,4): the induced partitions
  // are {23}{4} three times and {2}{34} twice, so {23}{4} wins
  REQUIRE(est.kj.size() == 2);
  CHECK(est.kj[0] == 1);
  CHECK(est.kj[1] == 2);
  std::vector<int> zx1(est.zx.begin() + 2, est.zx.end());
  CHECK(zx1 == std::vector<int>{0, 0, 1});

  // greedy refinement never worsens the objective
  PartitionEstimate ref = vi_point_estimate(draws, true);
  CHECK(ref.avg_vi <= est.avg_vi + 1e-12);
}

TEST_CASE("identical draws yield a zero ball and exact recovery") {
  std::vector<SamplerState> draws(5, state_of({0, 1, 1, 0}, {0, 0, 1, 0}));
  PartitionEstimate est = vi_point_estimate(draws);
  CHECK(est.zy == std::vector<int>{0, 1, 1, 0});
  CHECK(est.k == 2);
  CHECK(est.avg_vi == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(est.ball_size == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(est.kj == std::vector<int>{1, 2});
  Eigen::MatrixXd P = psm_y(draws);
  CHECK(P(0, 3) == doctest::Approx(1.0));
  CHECK(P(0, 1) == doctest::Approx(0.0).scale(1.0));
}

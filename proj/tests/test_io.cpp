// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <unistd.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emoe/io.hpp"
#include "emoe/sampler.hpp"
#include "emoe/synthetic.hpp"
#include "test_util.hpp"

using namespace emoe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emoe_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("key=value parsing with comments, lists and priors") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "# a comment\n"
      "iters = 250\n"
      "rate=0.5  # trailing comment\n"
      "name = damped cosine\n"
      "grid = 1.5, 2.5,3\n"
      "prior.magnitude = gamma(2,1.5)\n"
      "prior.sigma2 = lognormal(-4.6,0.5)\n"
      "prior.beta0 = normal(0,0.25)\n"
      "\n");
  CHECK(cfg.has("iters"));
  CHECK(!cfg.has("missing"));
  CHECK(cfg.get_long("iters", 0) == 250);
  CHECK(cfg.get_double("rate", 0.0) == doctest::Approx(0.5));
  CHECK(cfg.get_str("name", "") == "damped cosine");
  CHECK(cfg.get_double("absent", 7.5) == 7.5);
  CHECK(cfg.get_list("grid") == std::vector<double>{1.5, 2.5, 3.0});

  ScalarPrior fallback{ScalarPrior::Kind::Gamma, 1.0, 1.0};
  ScalarPrior g = cfg.get_prior("prior.magnitude", fallback);
  CHECK(g.kind == ScalarPrior::Kind::Gamma);
  CHECK(g.p1 == 2.0);
  CHECK(g.p2 == 1.5);
  ScalarPrior l = cfg.get_prior("prior.sigma2", fallback);
  CHECK(l.kind == ScalarPrior::Kind::LogNormal);
  CHECK(l.p1 == doctest::Approx(-4.6));
  ScalarPrior n = cfg.get_prior("prior.beta0", fallback);
  CHECK(n.kind == ScalarPrior::Kind::Normal);
  CHECK(n.p2 == doctest::Approx(0.25));
  ScalarPrior fb = cfg.get_prior("prior.absent", fallback);
  CHECK(fb.kind == ScalarPrior::Kind::Gamma);
  CHECK(fb.p1 == 1.0);

  CHECK_THROWS(KeyValueConfig::from_string("novalue\n"));
  KeyValueConfig bad = KeyValueConfig::from_string("p = cauchy(0,1)\n");
  CHECK_THROWS(bad.get_prior("p", fallback));
}

TEST_CASE("csv round trip keeps full precision") {
  TempDir tmp;
  Eigen::MatrixXd M(3, 2);
  M << 0.1234567890123456, -7.5, 3.0e-12, 4.0, 1e8, -0.0625;
  write_csv(tmp.file("t.csv"), {"alpha", "beta"}, M);
  CsvTable t = read_csv(tmp.file("t.csv"));
  REQUIRE(t.header.size() == 2);
  CHECK(t.header[0] == "alpha");
  CHECK(t.header[1] == "beta");
  REQUIRE(t.values.rows() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(t.values(i, j) == M(i, j));
  CHECK_THROWS(read_csv(tmp.file("absent.csv")));
}

TEST_CASE("dataset assembly from a table and config") {
  CsvTable t;
  t.header = {"x0", "x1", "y"};
  t.values.resize(4, 3);
  t.values << 0.5, 0, -0.2, 1.5, 1, 0.3, 2.5, 0, 0.8, 3.5, 2, 1.4;

  KeyValueConfig cfg = KeyValueConfig::from_string(
      "output = gaussian\n"
      "input1.family = categorical\n"
      "input1.categories = 3\n");
  Dataset d = dataset_from_table(t, cfg);
  CHECK(d.n() == 4);
  CHECK(d.dim() == 2);
  CHECK(d.output == OutputKind::Gaussian);
  CHECK(d.input_spec[0].family == InputFamilySpec::Family::GaussianNig);
  CHECK(d.input_spec[0].u0 == doctest::Approx(2.0));  // column mean
  CHECK(d.input_spec[0].c == 0.25);
  CHECK(d.input_spec[1].family == InputFamilySpec::Family::CategoricalDirichlet);
  CHECK(d.input_spec[1].categories() == 3);
  CHECK(d.y[3] == doctest::Approx(1.4));

  KeyValueConfig ocfg = KeyValueConfig::from_string(
      "output = ordinal\n"
      "ordinal_levels = 2\n"
      "cutoffs = 0, 1.5\n");
  CsvTable to = t;
  to.values.col(2) << 0, 1, 2, 1;
  Dataset od = dataset_from_table(to, ocfg);
  CHECK(od.output == OutputKind::OrdinalProbit);
  CHECK(od.ordinal_levels == 2);
  CHECK(od.cutoffs == std::vector<double>{0.0, 1.5});

  KeyValueConfig bad = KeyValueConfig::from_string("output = poisson\n");
  CHECK_THROWS(dataset_from_table(t, bad));
}

TEST_CASE("prior and sampler options from config keys") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "prior.magnitude = gamma(3,2)\n"
      "prior.ell0 = gamma(4,1)\n"
      "prior.u_theta = 2\n"
      "iters = 120\n"
      "burn_in = 20\n"
      "thin = 2\n"
      "seed = 9\n"
      "mode = dp\n"
      "m_aux = 5\n");
  PriorConfig p = priors_from_config(cfg, 2);
  CHECK(p.magnitude.p1 == 3.0);
  CHECK(p.lengthscale[0].p1 == 4.0);   // overridden
  CHECK(p.lengthscale[1].p1 == 10.0);  // default for higher dimensions
  CHECK(p.u_theta == 2.0);
  CHECK(p.v_theta == 1.0);

  SamplerOptions o = sampler_options_from_config(cfg);
  CHECK(o.iters == 120);
  CHECK(o.burn_in == 20);
  CHECK(o.thin == 2);
  CHECK(o.seed == 9);
  CHECK(o.dp_mode);
  CHECK(o.m_aux == 5);

  KeyValueConfig bad = KeyValueConfig::from_string("mode = banana\n");
  CHECK_THROWS(sampler_options_from_config(bad));
}

TEST_CASE("posterior trace round trip") {
  SyntheticData sim = generate_damped_cosine(DampedCosineConfig{16, 2, 7});
  PriorConfig priors;
  priors.default_lengthscales(2);
  SamplerOptions opts;
  opts.iters = 12;
  opts.burn_in = 4;
  opts.seed = 5;
  EdpSampler s(sim.data, priors, opts);
  PosteriorDraws draws = s.run();
  REQUIRE(draws.states.size() == 8);

  TempDir tmp;
  save_draws_jsonl(tmp.file("trace.jsonl"), draws, sim.data, opts.seed);
  PosteriorDraws back = load_draws_jsonl(tmp.file("trace.jsonl"));
  REQUIRE(back.states.size() == draws.states.size());
  CHECK(back.dp_mode == draws.dp_mode);
  for (size_t i = 0; i < draws.states.size(); ++i) {
    const SamplerState& a = draws.states[i];
    const SamplerState& b = back.states[i];
    CHECK(a.part.key() == b.part.key());
    CHECK(back.iters[i] == draws.iters[i]);
    CHECK(a.conc.alpha_theta == doctest::Approx(b.conc.alpha_theta).epsilon(1e-15));
    REQUIRE(a.experts.size() == b.experts.size());
    for (size_t j = 0; j < a.experts.size(); ++j) {
      CHECK(a.experts[j].sigma2 == doctest::Approx(b.experts[j].sigma2).epsilon(1e-15));
      CHECK(a.experts[j].beta0 == doctest::Approx(b.experts[j].beta0).epsilon(1e-15));
      CHECK(a.experts[j].sf2 == doctest::Approx(b.experts[j].sf2).epsilon(1e-15));
      for (int dd = 0; dd < 2; ++dd)
        CHECK(a.experts[j].ell[dd] ==
              doctest::Approx(b.experts[j].ell[dd]).epsilon(1e-15));
      CHECK(a.conc.alpha_psi[j] == doctest::Approx(b.conc.alpha_psi[j]).epsilon(1e-15));
    }
  }
  // Gaussian traces carry only a zero placeholder until the data is attached
  REQUIRE(back.states[0].latent.size() == sim.data.n());
  CHECK(back.states[0].latent.norm() == 0.0);
  attach_gaussian_latent(back, sim.data);
  for (const auto& st : back.states) {
    REQUIRE(st.latent.size() == sim.data.n());
    CHECK(st.latent[3] == doctest::Approx(sim.data.y[3]));
  }
}

TEST_CASE("ordinal traces carry the latent outputs") {
  SyntheticData sim = generate_damped_cosine(DampedCosineConfig{14, 1, 8});
  Dataset data = sim.data;
  data.output = OutputKind::OrdinalProbit;
  data.ordinal_levels = 2;
  data.cutoffs = {0.0, 1.0};
  for (int i = 0; i < data.n(); ++i)
    data.y[i] = discretize_output(sim.data.y[i], data.cutoffs);

  PriorConfig priors;
  priors.default_lengthscales(1);
  SamplerOptions opts;
  opts.iters = 8;
  opts.burn_in = 2;
  opts.seed = 6;
  EdpSampler s(data, priors, opts);
  PosteriorDraws draws = s.run();

  TempDir tmp;
  save_draws_jsonl(tmp.file("trace.jsonl"), draws, data, opts.seed);
  PosteriorDraws back = load_draws_jsonl(tmp.file("trace.jsonl"));
  REQUIRE(back.states.size() == draws.states.size());
  for (size_t i = 0; i < draws.states.size(); ++i) {
    REQUIRE(back.states[i].latent.size() == data.n());
    for (int r = 0; r < data.n(); ++r)
      CHECK(back.states[i].latent[r] ==
            doctest::Approx(draws.states[i].latent[r]).epsilon(1e-15));
  }
}

TEST_CASE("move statistics serialise") {
  TempDir tmp;
  MoveStats st;
  st.move1.proposed = 10;
  st.move1.accepted = 4;
  st.smart_split.proposed = 7;
  st.gibbs_scans = 100;
  save_move_stats(tmp.file("stats.json"), st);
  std::ifstream in(tmp.file("stats.json"));
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("\"move1\"") != std::string::npos);
  CHECK(text.find("\"gibbs_scans\"") != std::string::npos);
}

TEST_CASE("path helpers") {
  CHECK(join_path("a", "b") == "a/b");
  CHECK(join_path("a/", "b") == "a/b");
  CHECK(join_path("", "b") == "b");
}

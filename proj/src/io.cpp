// Apache License, Version 2.0, refer to LICENSE.txt
#include "emoe/io.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace emoe {

using nlohmann::json;

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) +
                                              ": empty key");
    cfg.kv_[key] = val;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueConfig::get_str(const std::string& key,
                                    const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
  }
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error("config key '" + key + "': not an integer: " + it->second);
  }
}

std::vector<double> KeyValueConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

ScalarPrior KeyValueConfig::get_prior(const std::string& key,
                                      const ScalarPrior& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = trim(it->second);
  size_t open = v.find('(');
  size_t close = v.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::runtime_error("config key '" + key + "': expected name(p1,p2)");
  std::string name = trim(v.substr(0, open));
  std::string args = v.substr(open + 1, close - open - 1);
  size_t comma = args.find(',');
  if (comma == std::string::npos)
    throw std::runtime_error("config key '" + key + "': expected two parameters");
  ScalarPrior p;
  p.p1 = std::stod(trim(args.substr(0, comma)));
  p.p2 = std::stod(trim(args.substr(comma + 1)));
  if (name == "gamma")
    p.kind = ScalarPrior::Kind::Gamma;
  else if (name == "lognormal")
    p.kind = ScalarPrior::Kind::LogNormal;
  else if (name == "normal")
    p.kind = ScalarPrior::Kind::Normal;
  else
    throw std::runtime_error("config key '" + key + "': unknown prior '" + name + "'");
  p.validate();
  return p;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
  {
    std::istringstream h(trim(line));
    std::string tok;
    while (std::getline(h, tok, ',')) t.header.push_back(trim(tok));
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream r(line);
    std::string tok;
    while (std::getline(r, tok, ',')) {
      tok = trim(tok);
      try {
        row.push_back(std::stod(tok));
      } catch (...) {
        throw std::runtime_error(path + " line " + std::to_string(lineno) +
                                 ": not numeric: '" + tok + "'");
      }
    }
    if (row.size() != t.header.size())
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": column count mismatch");
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<int>(rows.size()), static_cast<int>(t.header.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv file: " + path);
  out.precision(17);
  for (size_t j = 0; j < header.size(); ++j)
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  for (int i = 0; i < values.rows(); ++i)
    for (int j = 0; j < values.cols(); ++j)
      out << values(i, j) << (j + 1 < values.cols() ? "," : "\n");
}

Dataset dataset_from_table(const CsvTable& table, const KeyValueConfig& cfg) {
  if (table.values.cols() < 2)
    throw std::runtime_error("dataset needs at least one input and one output column");
  const int D = static_cast<int>(table.values.cols()) - 1;
  Dataset data;
  data.x = table.values.leftCols(D);
  data.y = table.values.col(D);

  std::string kind = cfg.get_str("output", "gaussian");
  if (kind == "gaussian") {
    data.output = OutputKind::Gaussian;
  } else if (kind == "ordinal") {
    data.output = OutputKind::OrdinalProbit;
    data.ordinal_levels = static_cast<int>(cfg.get_long("ordinal_levels", 1));
    std::vector<double> cuts = cfg.get_list("cutoffs");
    if (cuts.empty())
      for (int l = 0; l < data.ordinal_levels; ++l) cuts.push_back(static_cast<double>(l));
    data.cutoffs = cuts;
  } else {
    throw std::runtime_error("output must be 'gaussian' or 'ordinal', got '" + kind + "'");
  }

  data.input_spec.resize(D);
  for (int d = 0; d < D; ++d) {
    std::string p = "input" + std::to_string(d) + ".";
    std::string fam = cfg.get_str(p + "family", "nig");
    InputFamilySpec& s = data.input_spec[d];
    if (fam == "nig") {
      s.family = InputFamilySpec::Family::GaussianNig;
      s.u0 = cfg.get_double(p + "u0", data.x.col(d).mean());
      s.c = cfg.get_double(p + "c", 0.25);
      s.a = cfg.get_double(p + "a", 2.0);
      s.b = cfg.get_double(p + "b", 1.0);
    } else if (fam == "categorical") {
      s.family = InputFamilySpec::Family::CategoricalDirichlet;
      std::vector<double> g = cfg.get_list(p + "gamma");
      if (g.empty()) {
        int cats = static_cast<int>(data.x.col(d).maxCoeff()) + 1;
        g.assign(std::max(cats, 2), 1.0);
      }
      s.gamma = g;
    } else if (fam == "binomial") {
      s.family = InputFamilySpec::Family::BinomialBeta;
      s.trials = static_cast<int>(cfg.get_long(p + "trials", 1));
      s.g0 = cfg.get_double(p + "g0", 1.0);
      s.g1 = cfg.get_double(p + "g1", 1.0);
    } else {
      throw std::runtime_error("input" + std::to_string(d) + ".family: unknown '" + fam +
                               "'");
    }
    s.validate();
  }
  data.validate();
  return data;
}

Dataset load_dataset(const KeyValueConfig& cfg, const std::string& base_dir) {
  std::string path = cfg.get_str("data", "");
  if (path.empty()) throw std::runtime_error("config key 'data' (csv path) is required");
  if (!path.empty() && path[0] != '/') path = join_path(base_dir, path);
  return dataset_from_table(read_csv(path), cfg);
}

PriorConfig priors_from_config(const KeyValueConfig& cfg, int dim) {
  PriorConfig pr;
  pr.default_lengthscales(dim);
  pr.sigma2 = cfg.get_prior("prior.sigma2", pr.sigma2);
  pr.beta0 = cfg.get_prior("prior.beta0", pr.beta0);
  pr.magnitude = cfg.get_prior("prior.magnitude", pr.magnitude);
  if (cfg.has("prior.ell")) {
    ScalarPrior common = cfg.get_prior("prior.ell", pr.lengthscale[0]);
    for (auto& l : pr.lengthscale) l = common;
  }
  for (int d = 0; d < dim; ++d) {
    std::string key = "prior.ell" + std::to_string(d);
    if (cfg.has(key)) pr.lengthscale[d] = cfg.get_prior(key, pr.lengthscale[d]);
  }
  pr.u_theta = cfg.get_double("prior.u_theta", pr.u_theta);
  pr.v_theta = cfg.get_double("prior.v_theta", pr.v_theta);
  pr.u_psi = cfg.get_double("prior.u_psi", pr.u_psi);
  pr.v_psi = cfg.get_double("prior.v_psi", pr.v_psi);
  pr.validate(dim);
  return pr;
}

SamplerOptions sampler_options_from_config(const KeyValueConfig& cfg) {
  SamplerOptions o;
  o.iters = cfg.get_long("iters", o.iters);
  o.burn_in = cfg.get_long("burn_in", o.burn_in);
  o.thin = static_cast<int>(cfg.get_long("thin", o.thin));
  o.seed = static_cast<std::uint64_t>(cfg.get_long("seed", static_cast<long>(o.seed)));
  o.m_aux = static_cast<int>(cfg.get_long("m_aux", o.m_aux));
  std::string mode = cfg.get_str("mode", "edp");
  if (mode == "dp")
    o.dp_mode = true;
  else if (mode != "edp")
    throw std::runtime_error("mode must be 'edp' or 'dp', got '" + mode + "'");
  o.hmc_steps = static_cast<int>(cfg.get_long("hmc_steps", o.hmc_steps));
  o.hmc_step0 = cfg.get_double("hmc_step0", o.hmc_step0);
  o.move2_ratio_as_printed = cfg.get_long("move2_ratio_as_printed", 0) != 0;
  o.validate();
  return o;
}

namespace {
json expert_to_json(const ExpertParams& e) {
  json j;
  j["sigma2"] = e.sigma2;
  j["beta0"] = e.beta0;
  j["sf2"] = e.sf2;
  j["ell"] = std::vector<double>(e.ell.data(), e.ell.data() + e.ell.size());
  return j;
}

ExpertParams expert_from_json(const json& j) {
  ExpertParams e;
  e.sigma2 = j.at("sigma2").get<double>();
  e.beta0 = j.at("beta0").get<double>();
  e.sf2 = j.at("sf2").get<double>();
  std::vector<double> ell = j.at("ell").get<std::vector<double>>();
  e.ell = Eigen::Map<Eigen::VectorXd>(ell.data(), ell.size());
  return e;
}
}  // namespace

void save_draws_jsonl(const std::string& path, const PosteriorDraws& draws,
                      const Dataset& data, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  json meta;
  meta["format"] = "emoe-trace-v1";
  meta["dp_mode"] = draws.dp_mode;
  meta["seed"] = seed;
  meta["n"] = data.n();
  meta["dim"] = data.dim();
  meta["output"] = data.output == OutputKind::Gaussian ? "gaussian" : "ordinal";
  meta["draws"] = draws.states.size();
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["written_at"] = buf;  // metadata only; draw lines are seed-determined
  out << json{{"meta", meta}}.dump() << "\n";

  const bool ordinal = data.output == OutputKind::OrdinalProbit;
  for (size_t i = 0; i < draws.states.size(); ++i) {
    const SamplerState& s = draws.states[i];
    json j;
    j["iter"] = draws.iters[i];
    j["zy"] = s.part.zy;
    j["zx"] = s.part.zx;
    j["alpha_theta"] = s.conc.alpha_theta;
    j["alpha_psi"] = s.conc.alpha_psi;
    json ex = json::array();
    for (const auto& e : s.experts) ex.push_back(expert_to_json(e));
    j["experts"] = ex;
    if (ordinal)
      j["latent"] =
          std::vector<double>(s.latent.data(), s.latent.data() + s.latent.size());
    out << j.dump() << "\n";
  }
}

PosteriorDraws load_draws_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);
  json meta = json::parse(line);
  if (!meta.contains("meta"))
    throw std::runtime_error("trace file missing metadata header: " + path);
  PosteriorDraws draws;
  draws.dp_mode = meta["meta"].value("dp_mode", false);
  const int n = meta["meta"].value("n", 0);
  const bool ordinal = meta["meta"].value("output", "gaussian") == std::string("ordinal");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    SamplerState s;
    s.part.zy = j.at("zy").get<std::vector<int>>();
    s.part.zx = j.at("zx").get<std::vector<int>>();
    s.conc.alpha_theta = j.at("alpha_theta").get<double>();
    s.conc.alpha_psi = j.at("alpha_psi").get<std::vector<double>>();
    for (const auto& e : j.at("experts")) s.experts.push_back(expert_from_json(e));
    if (ordinal) {
      std::vector<double> lat = j.at("latent").get<std::vector<double>>();
      s.latent = Eigen::Map<Eigen::VectorXd>(lat.data(), lat.size());
    } else if (n > 0) {
      s.latent = Eigen::VectorXd::Zero(n);  // filled from data.y by consumers
    }
    s.part.recount();
    draws.states.push_back(std::move(s));
    draws.iters.push_back(j.value("iter", 0L));
  }
  return draws;
}

void attach_gaussian_latent(PosteriorDraws& draws, const Dataset& data) {
  if (data.output != OutputKind::Gaussian) return;
  for (auto& s : draws.states) s.latent = data.y;
}

void save_move_stats(const std::string& path, const MoveStats& stats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write stats file: " + path);
  auto counter = [](const MoveCounter& c) {
    return json{{"proposed", c.proposed}, {"accepted", c.accepted}};
  };
  json j;
  j["move1"] = counter(stats.move1);
  j["move2"] = counter(stats.move2);
  j["move3"] = counter(stats.move3);
  j["smart_split"] = counter(stats.smart_split);
  j["dumb_merge"] = counter(stats.dumb_merge);
  j["dumb_split"] = counter(stats.dumb_split);
  j["smart_merge"] = counter(stats.smart_merge);
  j["hmc"] = counter(stats.hmc);
  j["gibbs_scans"] = stats.gibbs_scans;
  j["gibbs_reassigned"] = stats.gibbs_reassigned;
  out << j.dump(2) << "\n";
}

std::string output_root() {
  const char* v = std::getenv("EMOE_OUTPUT_ROOT");
  return v && *v ? std::string(v) : std::string(".");
}

std::string join_path(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.back() == '/') return a + b;
  return a + "/" + b;
}

}  // namespace emoe

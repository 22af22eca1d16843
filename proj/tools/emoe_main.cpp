// Apache License, Version 2.0, refer to LICENSE.txt
//
// Command line driver: simulate / fit / predict / summarise.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emoe/io.hpp"
#include "emoe/math.hpp"
#include "emoe/partition_summary.hpp"
#include "emoe/prediction.hpp"
#include "emoe/sampler.hpp"
#include "emoe/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emoe;

namespace {

int cmd_simulate(int n, int dim, std::uint64_t seed, const std::string& out,
                 const std::string& truth, int ordinal_levels,
                 std::vector<double> cutoffs) {
  DampedCosineConfig cfg;
  cfg.n = n;
  cfg.dim = dim;
  cfg.seed = seed;
  SyntheticData gen = generate_damped_cosine(cfg);

  std::vector<std::string> header;
  for (int d = 0; d < dim; ++d) header.push_back("x" + std::to_string(d));
  header.push_back("y");
  Eigen::MatrixXd table(n, dim + 1);
  table.leftCols(dim) = gen.data.x;
  if (ordinal_levels > 0) {
    if (cutoffs.empty())
      for (int l = 0; l < ordinal_levels; ++l) cutoffs.push_back(static_cast<double>(l));
    for (int i = 0; i < n; ++i)
      table(i, dim) = discretize_output(gen.data.y[i], cutoffs);
  } else {
    table.col(dim) = gen.data.y;
  }
  write_csv(out, header, table);

  if (!truth.empty()) {
    Eigen::MatrixXd t(n, 4);
    for (int i = 0; i < n; ++i) {
      double x1 = gen.data.x(i, 0);
      t(i, 0) = gen.component[i];
      t(i, 1) = cfg.component1_weight(x1);
      t(i, 2) = cfg.mean(x1);
      t(i, 3) = gen.data.y[i];  // continuous output before any discretisation
    }
    write_csv(truth, {"component", "p1", "true_mean", "y_continuous"}, t);
  }
  std::cout << "wrote " << out << " (n=" << n << ", dim=" << dim << ", seed=" << seed
            << ")\n";
  return 0;
}

struct ChainResult {
  PosteriorDraws draws;
  std::string error;
};

int cmd_fit(const std::string& config_path, const std::string& out_dir_flag,
            int chains_flag, long seed_flag, const std::string& mode_flag) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  if (seed_flag >= 0) cfg.set("seed", std::to_string(seed_flag));
  if (!mode_flag.empty()) cfg.set("mode", mode_flag);

  std::string base_dir = fs::path(config_path).parent_path().string();
  Dataset data = load_dataset(cfg, base_dir);
  PriorConfig priors = priors_from_config(cfg, data.dim());
  SamplerOptions opts = sampler_options_from_config(cfg);
  int chains = chains_flag > 0 ? chains_flag
                               : static_cast<int>(cfg.get_long("chains", 1));
  if (chains < 1) throw std::runtime_error("chains must be >= 1");

  std::string out_dir = out_dir_flag.empty()
                            ? join_path(output_root(), cfg.get_str("out", "emoe_run"))
                            : out_dir_flag;
  fs::create_directories(out_dir);

  std::vector<ChainResult> results(chains);
  auto run_chain = [&](int c) {
    try {
      SamplerOptions o = opts;
      o.seed = opts.seed + static_cast<std::uint64_t>(c);
      EdpSampler sampler(data, priors, o);
      sampler.init_from_prior();
      results[c].draws = sampler.run();
    } catch (const std::exception& e) {
      results[c].error = e.what();
    }
  };
  std::vector<std::thread> workers;
  for (int c = 0; c < chains; ++c) workers.emplace_back(run_chain, c);
  for (auto& w : workers) w.join();
  for (int c = 0; c < chains; ++c)
    if (!results[c].error.empty())
      throw std::runtime_error("chain " + std::to_string(c) + ": " + results[c].error);

  json manifest;
  manifest["config"] = config_path;
  manifest["chains"] = chains;
  manifest["mode"] = opts.dp_mode ? "dp" : "edp";
  manifest["iters"] = opts.iters;
  manifest["burn_in"] = opts.burn_in;
  manifest["thin"] = opts.thin;
  manifest["base_seed"] = opts.seed;
  json chain_list = json::array();
  for (int c = 0; c < chains; ++c) {
    std::string cdir = join_path(out_dir, "chain_" + std::to_string(c));
    fs::create_directories(cdir);
    std::string trace = join_path(cdir, "trace.jsonl");
    save_draws_jsonl(trace, results[c].draws, data,
                     opts.seed + static_cast<std::uint64_t>(c));
    save_move_stats(join_path(cdir, "stats.json"), results[c].draws.stats);
    // per-iteration cluster counts of the retained draws
    Eigen::MatrixXd kt(results[c].draws.states.size(), 3);
    for (size_t i = 0; i < results[c].draws.states.size(); ++i) {
      NestedPartition p = results[c].draws.states[i].part;
      p.recount();
      int kx = 0;
      for (int v : p.kj) kx += v;
      kt(static_cast<int>(i), 0) = static_cast<double>(results[c].draws.iters[i]);
      kt(static_cast<int>(i), 1) = p.k;
      kt(static_cast<int>(i), 2) = kx;
    }
    write_csv(join_path(cdir, "ktrace.csv"), {"iter", "k", "kx_total"}, kt);
    chain_list.push_back({{"dir", cdir}, {"trace", trace},
                          {"seed", opts.seed + static_cast<std::uint64_t>(c)}});
  }
  manifest["chain_runs"] = chain_list;
  std::ofstream mf(join_path(out_dir, "manifest.json"));
  mf << manifest.dump(2) << "\n";
  std::cout << "fit complete: " << out_dir << " (" << chains << " chain(s), "
            << results[0].draws.states.size() << " retained draws each)\n";
  return 0;
}

std::vector<SamplerState> pool_draws(const std::vector<std::string>& trace_paths,
                                     const Dataset& data, bool* dp_mode) {
  std::vector<SamplerState> states;
  *dp_mode = false;
  for (const auto& p : trace_paths) {
    PosteriorDraws d = load_draws_jsonl(p);
    attach_gaussian_latent(d, data);
    *dp_mode = *dp_mode || d.dp_mode;
    for (auto& s : d.states) states.push_back(std::move(s));
  }
  if (states.empty()) throw std::runtime_error("no retained draws in trace file(s)");
  return states;
}

int cmd_predict(const std::string& config_path, const std::vector<std::string>& traces,
                const std::string& test_path, const std::string& out_path,
                int completions, int prior_mc, double grid_lo, double grid_hi,
                int grid_points, const std::string& density_out) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  std::string base_dir = fs::path(config_path).parent_path().string();
  Dataset data = load_dataset(cfg, base_dir);
  PriorConfig priors = priors_from_config(cfg, data.dim());

  CsvTable test = read_csv(test_path);
  if (static_cast<int>(test.header.size()) < data.dim())
    throw std::runtime_error("test file needs at least " + std::to_string(data.dim()) +
                             " input columns");
  Eigen::MatrixXd Xstar = test.values.leftCols(data.dim());

  bool dp_mode = false;
  std::vector<SamplerState> states = pool_draws(traces, data, &dp_mode);

  bool sigma2_fixed =
      data.output == OutputKind::OrdinalProbit && data.ordinal_levels == 1;
  Rng rng(static_cast<std::uint64_t>(cfg.get_long("seed", 1)) + 7919);
  PriorOutputMix fresh = make_prior_output_mix(priors, prior_mc, rng, sigma2_fixed);
  PredictOptions popt;
  popt.completions = completions;
  std::vector<PredictiveDist> dists =
      predict_batch(data, states, dp_mode, Xstar, fresh, popt);

  const int Q = static_cast<int>(Xstar.rows());
  if (data.output == OutputKind::Gaussian) {
    if (!(grid_hi > grid_lo)) {
      double ymin = data.y.minCoeff(), ymax = data.y.maxCoeff();
      double pad = 0.5 * (ymax - ymin) + 1.0;
      grid_lo = ymin - pad;
      grid_hi = ymax + pad;
    }
    Eigen::MatrixXd outm(Q, 4);
    for (int q = 0; q < Q; ++q) {
      auto segs = dists[q].hpd(0.95, grid_lo, grid_hi, grid_points);
      outm(q, 0) = dists[q].mean();
      outm(q, 1) = segs.front().first;
      outm(q, 2) = segs.back().second;
      outm(q, 3) = static_cast<double>(segs.size());
    }
    write_csv(out_path, {"mean", "hpd95_lo", "hpd95_hi", "hpd95_segments"}, outm);
    if (!density_out.empty()) {
      Eigen::MatrixXd dm(grid_points, Q + 1);
      std::vector<std::string> header{"y"};
      double h = (grid_hi - grid_lo) / (grid_points - 1);
      for (int i = 0; i < grid_points; ++i) dm(i, 0) = grid_lo + i * h;
      for (int q = 0; q < Q; ++q) {
        header.push_back("density_" + std::to_string(q));
        for (int i = 0; i < grid_points; ++i) dm(i, q + 1) = dists[q].density(dm(i, 0));
      }
      write_csv(density_out, header, dm);
    }
  } else {
    const int L = data.ordinal_levels;
    Eigen::MatrixXd outm(Q, L + 4);
    std::vector<std::string> header;
    for (int l = 0; l <= L; ++l) header.push_back("p" + std::to_string(l));
    header.push_back("mode");
    header.push_back("central95_lo");
    header.push_back("central95_hi");
    for (int q = 0; q < Q; ++q) {
      std::vector<double> p = dists[q].ordinal_probs(data.cutoffs, L);
      int mode = 0;
      for (int l = 0; l <= L; ++l) {
        outm(q, l) = p[l];
        if (p[l] > p[mode]) mode = l;
      }
      auto [lo, hi] = dists[q].ordinal_central(data.cutoffs, L, 0.95);
      outm(q, L + 1) = mode;
      outm(q, L + 2) = lo;
      outm(q, L + 3) = hi;
    }
    write_csv(out_path, header, outm);
  }
  std::cout << "wrote " << out_path << " (" << Q << " prediction(s), "
            << states.size() << " pooled draws)\n";
  return 0;
}

int cmd_summarise(const std::vector<std::string>& traces, const std::string& out_dir,
                  bool refine) {
  // partition summaries need only the labels; reuse the loader with a
  // minimal dataset-free path
  std::vector<SamplerState> states;
  for (const auto& p : traces) {
    PosteriorDraws d = load_draws_jsonl(p);
    for (auto& s : d.states) states.push_back(std::move(s));
  }
  if (states.empty()) throw std::runtime_error("no retained draws in trace file(s)");
  fs::create_directories(out_dir);

  PartitionEstimate est = vi_point_estimate(states, refine);
  const int N = static_cast<int>(est.zy.size());

  Eigen::MatrixXd lab(N, 2);
  for (int n = 0; n < N; ++n) {
    lab(n, 0) = est.zy[n];
    lab(n, 1) = est.zx[n];
  }
  write_csv(join_path(out_dir, "vi_estimate.csv"), {"zy", "zx"}, lab);

  json summary;
  summary["draws"] = states.size();
  summary["k"] = est.k;
  summary["kj"] = est.kj;
  summary["avg_vi"] = est.avg_vi;
  summary["ball_size_95"] = est.ball_size;
  std::ofstream sf(join_path(out_dir, "vi_summary.json"));
  sf << summary.dump(2) << "\n";

  write_csv(join_path(out_dir, "psm_y.csv"), {}, psm_y(states));
  for (int j = 0; j < est.k; ++j) {
    std::vector<int> members;
    for (int n = 0; n < N; ++n)
      if (est.zy[n] == j) members.push_back(n);
    Eigen::MatrixXd m = psm_x_within(states, members);
    Eigen::MatrixXd with_idx(m.rows(), m.cols() + 1);
    for (size_t i = 0; i < members.size(); ++i) with_idx(i, 0) = members[i];
    with_idx.rightCols(m.cols()) = m;
    write_csv(join_path(out_dir, "psm_x_cluster" + std::to_string(j) + ".csv"), {},
              with_idx);
  }
  std::cout << "summary: k=" << est.k << " kj=[";
  for (size_t j = 0; j < est.kj.size(); ++j)
    std::cout << est.kj[j] << (j + 1 < est.kj.size() ? " " : "");
  std::cout << "] avg_vi=" << est.avg_vi << " ball95=" << est.ball_size << " -> "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enriched mixture of Gaussian-process experts"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate the damped-cosine benchmark");
  int sim_n = 200, sim_dim = 1, sim_levels = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "data.csv", sim_truth;
  std::vector<double> sim_cutoffs;
  sim->add_option("--n", sim_n, "points");
  sim->add_option("--dim", sim_dim, "input dimensions");
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("--out", sim_out, "output csv path");
  sim->add_option("--truth", sim_truth, "optional truth sidecar csv");
  sim->add_option("--ordinal-levels", sim_levels,
                  "discretise outputs to codes 0..L (0 = keep continuous)");
  sim->add_option("--cutoffs", sim_cutoffs, "cutoffs for discretisation")
      ->delimiter(',');

  // fit
  auto* fit = app.add_subcommand("fit", "run the posterior sampler");
  std::string fit_config, fit_out, fit_mode;
  int fit_chains = 0;
  long fit_seed = -1;
  fit->add_option("--config", fit_config, "key = value run configuration")->required();
  fit->add_option("--out", fit_out, "output directory (default from config/env)");
  fit->add_option("--chains", fit_chains, "parallel chains (overrides config)");
  fit->add_option("--seed", fit_seed, "base seed (overrides config)");
  fit->add_option("--mode", fit_mode, "edp or dp (overrides config)");

  // predict
  auto* pred = app.add_subcommand("predict", "predictive means, intervals, densities");
  std::string pred_config, pred_test, pred_out = "predictions.csv", pred_density;
  std::vector<std::string> pred_traces;
  int pred_completions = 200, pred_prior_mc = 1000, pred_grid_points = 2001;
  double pred_lo = 0.0, pred_hi = 0.0;
  pred->add_option("--config", pred_config, "run configuration")->required();
  pred->add_option("--draws", pred_traces, "trace.jsonl path(s), pooled")->required();
  pred->add_option("--test", pred_test, "csv of prediction inputs (nan = unobserved)")
      ->required();
  pred->add_option("--out", pred_out, "prediction csv");
  pred->add_option("--density-out", pred_density, "per-point density grid csv");
  pred->add_option("--completions", pred_completions,
                   "Monte Carlo completions for unobserved inputs");
  pred->add_option("--prior-mc", pred_prior_mc, "fresh-expert Monte Carlo samples");
  pred->add_option("--grid-lo", pred_lo, "density/interval grid lower edge");
  pred->add_option("--grid-hi", pred_hi, "density/interval grid upper edge");
  pred->add_option("--grid-points", pred_grid_points, "density/interval grid size");

  // summarise
  auto* summ = app.add_subcommand("summarise", "clustering point estimate and PSMs");
  std::vector<std::string> summ_traces;
  std::string summ_out = "summary";
  bool summ_refine = false;
  summ->add_option("--draws", summ_traces, "trace.jsonl path(s), pooled")->required();
  summ->add_option("--out", summ_out, "output directory");
  summ->add_flag("--refine", summ_refine, "greedy single-point refinement sweeps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(sim_n, sim_dim, sim_seed, sim_out, sim_truth, sim_levels,
                          sim_cutoffs);
    if (fit->parsed()) return cmd_fit(fit_config, fit_out, fit_chains, fit_seed, fit_mode);
    if (pred->parsed())
      return cmd_predict(pred_config, pred_traces, pred_test, pred_out, pred_completions,
                         pred_prior_mc, pred_lo, pred_hi, pred_grid_points, pred_density);
    if (summ->parsed()) return cmd_summarise(summ_traces, summ_out, summ_refine);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

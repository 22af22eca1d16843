// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emoe/sampler.hpp"
#include "emoe/types.hpp"

namespace emoe {

// key = value configuration file: one pair per line, '#' comments, blank
// lines ignored. Keys are case-sensitive.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::vector<double> get_list(const std::string& key) const;  // comma separated

  // "gamma(2,1.5)" / "lognormal(-4.6,0.5)" / "normal(0,0.5)"
  ScalarPrior get_prior(const std::string& key, const ScalarPrior& fallback) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// numeric CSV with a header row
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

// Dataset assembly from a table whose last column is the output. Per-column
// input families come from input<d>.* keys; defaults are NIG with u0 equal
// to the column mean, c=1/4, a=2, b=1.
Dataset dataset_from_table(const CsvTable& table, const KeyValueConfig& cfg);
Dataset load_dataset(const KeyValueConfig& cfg, const std::string& base_dir);

PriorConfig priors_from_config(const KeyValueConfig& cfg, int dim);
SamplerOptions sampler_options_from_config(const KeyValueConfig& cfg);

// Posterior draw traces: a metadata header line (the only place a timestamp
// appears) followed by one JSON object per retained draw.
void save_draws_jsonl(const std::string& path, const PosteriorDraws& draws,
                      const Dataset& data, std::uint64_t seed);
PosteriorDraws load_draws_jsonl(const std::string& path);
// Gaussian traces do not store the latent vector (it equals y); restore it
// before handing loaded draws to prediction.
void attach_gaussian_latent(PosteriorDraws& draws, const Dataset& data);

void save_move_stats(const std::string& path, const MoveStats& stats);

// $EMOE_OUTPUT_ROOT, defaulting to "." when unset
std::string output_root();

std::string join_path(const std::string& a, const std::string& b);

}  // namespace emoe

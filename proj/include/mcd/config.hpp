#ifndef MCD_CONFIG_HPP
#define MCD_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcd/sim_harness.hpp"

namespace mcd {

// Key/value config with [section] headers, '#' comments and comma lists.
// Flat keys live under the empty section; lookup keys are "section.key".
class IniMap {
 public:
  static IniMap parse(const std::string& text);
  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

 private:
  std::map<std::string, std::string> kv_;
};

struct RunConfig {
  std::string command;
  uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";

  // data (fit command)
  std::string data_file;
  std::string response;
  std::vector<std::string> covariates;
  std::vector<std::string> discrete_covariates;
  bool response_discrete = false;

  Family family = Family::GaussianLinear;
  int trials = 8;
  std::vector<EstimatorTag> estimators;

  // optional partition override for the plain HD/NED tags (column names)
  bool has_partition = false;
  std::vector<std::string> part_m, part_s, part_g;

  // simulation commands
  int n = 31;
  int replications = 500;
  Eigen::VectorXd true_beta;
  double true_log_sigma = 0.0;

  ContaminationScheme scheme;
  std::vector<double> z_grid;

  int mc_points = 101;
  Aggregation aggregation = Aggregation::AverageOverXi;

  BandwidthGrid grid;
  CmRule cm_rule = CmRule::DensityLogLik;
  std::optional<double> fixed_cm, fixed_cg, fixed_cy;  // standardized scale

  int bootstrap_B = 0;

  std::string config_text;  // verbatim source, echoed into the manifest
};

RunConfig parse_config_text(const std::string& text);
// Reads an .ini config, or a manifest.json produced by a previous run (the
// embedded config text is re-parsed so outputs reproduce byte-identically).
RunConfig load_config(const std::string& path);

std::string config_hash_hex(const std::string& text);

}  // namespace mcd

#endif

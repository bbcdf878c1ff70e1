#include "mcd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcd/rng.hpp"

namespace mcd {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

IniMap IniMap::parse(const std::string& text) {
  IniMap out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorCode::Config, "malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, "expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::Config, "empty key at line " + std::to_string(lineno));
    out.kv_[section.empty() ? key : section + "." + key] = val;
  }
  return out;
}

std::string IniMap::get(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string IniMap::require(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end() || it->second.empty())
    throw Error(ErrorCode::Config, "missing required config key: " + key);
  return it->second;
}

double IniMap::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end() || it->second.empty()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw Error(ErrorCode::Config, "key " + key + " is not a number: " + it->second);
  }
}

int IniMap::get_int(const std::string& key, int fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end() || it->second.empty()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (...) {
    throw Error(ErrorCode::Config, "key " + key + " is not an integer: " + it->second);
  }
}

std::vector<std::string> IniMap::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  std::istringstream is(it->second);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> IniMap::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& s : get_list(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (...) {
      throw Error(ErrorCode::Config, "key " + key + " has a non-numeric entry: " + s);
    }
  }
  return out;
}

RunConfig parse_config_text(const std::string& text) {
  const IniMap ini = IniMap::parse(text);
  RunConfig cfg;
  cfg.config_text = text;
  cfg.command = ini.get("command");
  if (cfg.command != "fit" && cfg.command != "simulate" && cfg.command != "bootstrap" &&
      cfg.command != "breakdown")
    throw Error(ErrorCode::Config, "command must be one of fit/simulate/bootstrap/breakdown");

  const std::string seed_str = ini.get("seed");
  if (!seed_str.empty()) cfg.seed = std::stoull(seed_str);
  cfg.threads = ini.get_int("threads", 0);
  cfg.out_dir = ini.get("out", "out");

  cfg.data_file = ini.get("data.file");
  cfg.response = ini.get("data.response");
  cfg.covariates = ini.get_list("data.covariates");
  cfg.discrete_covariates = ini.get_list("data.discrete_covariates");
  cfg.response_discrete = ini.get("data.response_discrete", "false") == "true";

  const std::string fam = ini.get("model.family", "gaussian");
  if (fam == "gaussian")
    cfg.family = Family::GaussianLinear;
  else if (fam == "logistic")
    cfg.family = Family::Logistic;
  else if (fam == "binomial")
    cfg.family = Family::Binomial;
  else
    throw Error(ErrorCode::Config, "model.family must be gaussian/logistic/binomial");
  cfg.trials = ini.get_int("model.trials", 8);

  for (const std::string& t : ini.get_list("estimators.tags")) cfg.estimators.push_back(parse_tag(t));

  cfg.part_m = ini.get_list("partition.m_only");
  cfg.part_s = ini.get_list("partition.shared");
  cfg.part_g = ini.get_list("partition.g_only");
  cfg.has_partition = !cfg.part_m.empty() || !cfg.part_s.empty() || !cfg.part_g.empty();

  cfg.n = ini.get_int("simulation.n", 31);
  cfg.replications = ini.get_int("simulation.replications", 500);
  const std::vector<double> beta = ini.get_double_list("simulation.true_beta");
  if (!beta.empty()) {
    cfg.true_beta.resize(static_cast<Eigen::Index>(beta.size()));
    for (size_t i = 0; i < beta.size(); ++i) cfg.true_beta[static_cast<Eigen::Index>(i)] = beta[i];
  }
  cfg.true_log_sigma = ini.get_double("simulation.true_log_sigma", 0.0);

  const std::string scen = ini.get("contamination.scenario", "none");
  if (scen == "none")
    cfg.scheme.mode = ContaminationMode::None;
  else if (scen == "1")
    cfg.scheme.mode = ContaminationMode::UniformOverX;
  else if (scen == "2")
    cfg.scheme.mode = ContaminationMode::LocalizedAtX1;
  else if (scen == "binomial-uniform")
    cfg.scheme.mode = ContaminationMode::BinomialUniform;
  else if (scen == "binomial-local")
    cfg.scheme.mode = ContaminationMode::BinomialLocal;
  else
    throw Error(ErrorCode::Config, "contamination.scenario must be none/1/2/binomial-uniform/binomial-local");
  cfg.scheme.k = ini.get_int("contamination.k", 0);
  cfg.scheme.z = ini.get_double("contamination.z", 0.0);
  cfg.scheme.alpha = ini.get_double("contamination.alpha", 0.0);
  cfg.scheme.category = ini.get_int("contamination.category", 8);
  cfg.z_grid = ini.get_double_list("contamination.z_grid");
  if (cfg.z_grid.empty()) cfg.z_grid = ini.get_double_list("contamination.alpha_grid");

  cfg.mc_points = ini.get_int("disparity.mc_points", 101);
  const std::string agg = ini.get("disparity.aggregation", "average");
  if (agg == "average")
    cfg.aggregation = Aggregation::AverageOverXi;
  else if (agg == "integrate")
    cfg.aggregation = Aggregation::IntegrateOverHhat;
  else
    throw Error(ErrorCode::Config, "disparity.aggregation must be average or integrate");

  cfg.grid.lo = ini.get_double("bandwidth.grid_min", 0.05);
  cfg.grid.hi = ini.get_double("bandwidth.grid_max", 5.0);
  cfg.grid.size = ini.get_int("bandwidth.grid_points", 15);
  const std::string rule = ini.get("bandwidth.cm_rule", "density-loglik");
  if (rule == "density-loglik")
    cfg.cm_rule = CmRule::DensityLogLik;
  else if (rule == "nw-sse")
    cfg.cm_rule = CmRule::NwSse;
  else
    throw Error(ErrorCode::Config, "bandwidth.cm_rule must be density-loglik or nw-sse");
  if (ini.has("bandwidth.c_m")) cfg.fixed_cm = ini.get_double("bandwidth.c_m", 0.0);
  if (ini.has("bandwidth.c_g")) cfg.fixed_cg = ini.get_double("bandwidth.c_g", 0.0);
  if (ini.has("bandwidth.c_y")) cfg.fixed_cy = ini.get_double("bandwidth.c_y", 0.0);

  cfg.bootstrap_B = ini.get_int("bootstrap.B", cfg.command == "fit" ? 100 : 0);

  if (cfg.seed == 0) throw Error(ErrorCode::Config, "seed is required (no wall-clock default)");
  if (cfg.estimators.empty()) throw Error(ErrorCode::Config, "estimators.tags must not be empty");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  // a manifest from a previous run embeds the config verbatim
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      const nlohmann::json j = nlohmann::json::parse(text);
      text = j.at("config_text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, std::string("cannot read manifest: ") + e.what());
    }
  }
  return parse_config_text(text);
}

std::string config_hash_hex(const std::string& text) {
  const uint64_t h = RngStream::hash(text);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace mcd

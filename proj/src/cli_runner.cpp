#include "mcd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <json.hpp>

#include "mcd/parallel.hpp"
#include "mcd/table_io.hpp"

namespace mcd {

namespace {

int column_index(const CsvTable& t, const std::string& name) {
  for (size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == name) return static_cast<int>(j);
  throw Error(ErrorCode::SchemaMismatch, "column not found in csv: " + name);
}

double parse_cell(const std::string& s, size_t row, const std::string& col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw Error(ErrorCode::SchemaMismatch,
                "non-numeric cell '" + s + "' at data row " + std::to_string(row) + ", column " + col);
  }
}

StudyConfig study_config_from(const RunConfig& cfg) {
  StudyConfig sc;
  sc.family = cfg.family;
  sc.n = cfg.n;
  sc.replications = cfg.replications;
  sc.estimators = cfg.estimators;
  if (cfg.true_beta.size() == 0) {
    sc.true_beta = Eigen::VectorXd::Ones(4);
    if (cfg.family != Family::GaussianLinear) {
      sc.true_beta *= 0.5;
      sc.true_beta[0] = 0.0;
    }
  } else {
    sc.true_beta = cfg.true_beta;
  }
  sc.true_log_sigma = cfg.true_log_sigma;
  sc.binom_trials = cfg.trials;
  sc.contamination = cfg.scheme;
  sc.mc_points = cfg.mc_points;
  sc.aggregation = cfg.aggregation;
  sc.grid = cfg.grid;
  sc.cm_rule = cfg.cm_rule;
  sc.bootstrap_B = cfg.command == "bootstrap" ? std::max(cfg.bootstrap_B, 2) : cfg.bootstrap_B;
  if (cfg.command == "simulate" || cfg.command == "breakdown") sc.bootstrap_B = 0;
  sc.seed = cfg.seed;
  sc.threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  return sc;
}

nlohmann::json base_manifest(const RunConfig& cfg) {
  nlohmann::json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["version"] = MCD_VERSION;
  j["config_hash"] = config_hash_hex(cfg.config_text);
  j["config_text"] = cfg.config_text;
  return j;
}

void write_manifest(const RunConfig& cfg, nlohmann::json j) {
  write_text_file(cfg.out_dir + "/manifest.json", j.dump(2) + "\n");
}

int run_simulate(const RunConfig& cfg) {
  const StudyConfig sc = study_config_from(cfg);
  const StudySummary s = run_study(sc);
  write_text_file(cfg.out_dir + "/summary.csv", summary_csv(s));
  write_text_file(cfg.out_dir + "/summary.md", summary_markdown(s));
  nlohmann::json j = base_manifest(cfg);
  j["replications"] = s.replications;
  j["bootstrap_B"] = sc.bootstrap_B;
  j["outputs"] = {"summary.csv", "summary.md"};
  write_manifest(cfg, j);
  std::cout << summary_markdown(s);
  return 0;
}

int run_breakdown(const RunConfig& cfg) {
  if (cfg.z_grid.empty())
    throw Error(ErrorCode::Config, "breakdown requires contamination.z_grid (or alpha_grid)");
  StudyConfig sc = study_config_from(cfg);
  const BreakdownCurves curves = breakdown_curve(sc, cfg.z_grid);
  write_text_file(cfg.out_dir + "/curves.csv", curves_csv(curves));
  // the clean-limit summary doubles as the study table
  write_text_file(cfg.out_dir + "/summary.csv", summary_csv(curves.summaries.back()));
  write_text_file(cfg.out_dir + "/summary.md", summary_markdown(curves.summaries.back()));
  nlohmann::json j = base_manifest(cfg);
  j["replications"] = sc.replications;
  j["grid"] = cfg.z_grid;
  j["outputs"] = {"curves.csv", "summary.csv", "summary.md"};
  write_manifest(cfg, j);
  return 0;
}

int run_fit(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  ModelSpec model;
  model.family = cfg.family;
  model.m_trials = cfg.family == Family::Binomial ? cfg.trials : 1;
  for (int k = 0; k < ds.n_x_indices(); ++k) model.design_cols.push_back(k);
  const int p = model.theta_dim();
  const int threads =
      cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());

  // optional named-partition override for the plain HD/NED tags
  auto name_to_index = [&](const std::string& nm) {
    for (size_t j = 0; j < ds.x_names.size(); ++j)
      if (ds.x_names[j] == nm) return static_cast<int>(j);
    throw Error(ErrorCode::Config, "partition names an unknown covariate: " + nm);
  };
  CovariatePartition override_part;
  if (cfg.has_partition) {
    for (const auto& nm : cfg.part_m) override_part.m_only.push_back(name_to_index(nm));
    for (const auto& nm : cfg.part_s) override_part.shared.push_back(name_to_index(nm));
    for (const auto& nm : cfg.part_g) override_part.g_only.push_back(name_to_index(nm));
  }

  RngStream master(cfg.seed);
  std::vector<FitRow> rows(cfg.estimators.size());
  std::map<std::string, nlohmann::json> bw_echo;
  std::mutex echo_mu;
  int failures = 0;
  std::mutex fail_mu;

  auto fit_one = [&](int t) {
    const EstimatorTag tag = cfg.estimators[static_cast<size_t>(t)];
    const std::string label = tag_label(tag, cfg.family);
    FitRow& row = rows[static_cast<size_t>(t)];
    row.estimator = label;
    RngStream tag_rng = master.child(RngStream::hash(label));
    try {
      FitResult fr;
      FitContext ctx;
      ctx.ds = &ds;
      ctx.model = model;
      ctx.tag = tag;
      ctx.theta_hat = Eigen::VectorXd();
      std::optional<DensityEstimate> density;

      if (tag == EstimatorTag::MLE) {
        fr = fit_mle(ds, model);
      } else if (tag == EstimatorTag::Huber) {
        fr = fit_huber(ds, model);
      } else if (tag_is_marginal(tag)) {
        const ThetaVector init = mle_fit(model, ds);
        const Eigen::VectorXd resid =
            response_vector(model, ds) - design_matrix(model, ds) * init.head(model.n_regressors());
        const double sd =
            std::sqrt((resid.array() - resid.mean()).square().sum() / (resid.size() - 1.0));
        double h = (cfg.fixed_cy ? *cfg.fixed_cy : 0.0) * sd;
        if (!cfg.fixed_cy) {
          // pooled loglik CV via the homoscedastic machinery on a residual copy
          Dataset rds = ds;
          rds.y_cont.col(0) = resid;
          CovariatePartition none;
          const BandwidthChoice c =
              cv_conditional_bandwidth(rds, none, Eigen::VectorXd(), Eigen::VectorXd(),
                                       cfg.grid.values());
          h = c.value * std::max(sd, 1e-12);
        }
        ctx.marginal_bandwidth = h;
        fr = fit_marginal(ds, model, tag_ckind(tag), h, init, {});
        {
          std::lock_guard<std::mutex> lock(echo_mu);
          bw_echo[label] = {{"c_resid", h}};
        }
      } else {
        CovariatePartition part = partition_for_tag(tag, ds);
        if (cfg.has_partition && (tag == EstimatorTag::HD || tag == EstimatorTag::NED))
          part = override_part;
        SelectedBandwidths bw = select_bandwidths(ds, part, cfg.grid, cfg.cm_rule);
        if (cfg.fixed_cm && bw.set.c_m.size() > 0)
          bw.set.c_m = *cfg.fixed_cm * (bw.set.c_m / std::max(bw.cm_std, 1e-300));
        if (cfg.fixed_cg && bw.set.c_g.size() > 0)
          bw.set.c_g = *cfg.fixed_cg * (bw.set.c_g / std::max(bw.cg_std, 1e-300));
        if (cfg.fixed_cy && bw.set.c_y.size() > 0)
          bw.set.c_y = *cfg.fixed_cy * (bw.set.c_y / std::max(bw.cy_std, 1e-300));
        density.emplace(DensityEstimate::fit(ds, part, bw.set));
        DisparitySpec dspec{tag_ckind(tag), cfg.mc_points, cfg.aggregation, tag_rng.child("mc")};
        const ThetaVector init = mle_fit(model, ds);
        fr = fit_mde(*density, ds, part, model, dspec, init, {});
        ctx.part = part;
        ctx.bw = bw.set;
        ctx.dspec = dspec;
        {
          std::lock_guard<std::mutex> lock(echo_mu);
          bw_echo[label] = {{"cm_std", bw.cm_std}, {"cg_std", bw.cg_std}, {"cy_std", bw.cy_std}};
        }
      }

      row.estimate = fr.theta;
      ctx.theta_hat = fr.theta;
      if (density) ctx.density = &*density;
      if (cfg.bootstrap_B >= 2) {
        const BootstrapResult br = run_bootstrap(ctx, cfg.bootstrap_B, tag_rng.child("boot"));
        row.corrected = br.theta_corrected;
        row.sd = br.se;
      } else {
        row.corrected = fr.theta;
        row.sd = Eigen::VectorXd::Zero(p);
      }
    } catch (const Error& e) {
      row.failed = true;
      std::lock_guard<std::mutex> lock(fail_mu);
      ++failures;
      std::cerr << "estimator " << label << " failed: " << e.what() << "\n";
    }
  };
  parallel_for(static_cast<int>(cfg.estimators.size()), threads, fit_one);

  write_text_file(cfg.out_dir + "/estimates.csv", estimates_csv(rows, model.param_names(), cfg.family));
  nlohmann::json j = base_manifest(cfg);
  j["n"] = ds.n();
  j["bootstrap_B"] = cfg.bootstrap_B;
  j["outputs"] = {"estimates.csv"};
  nlohmann::json bwj;
  for (auto& [k, v] : bw_echo) bwj[k] = v;
  j["selected_bandwidths"] = bwj;
  j["failures"] = failures;
  write_manifest(cfg, j);
  return failures > 0 ? 4 : 0;
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.data_file.empty()) throw Error(ErrorCode::Config, "data.file is required for fit");
  if (cfg.response.empty()) throw Error(ErrorCode::Config, "data.response is required for fit");
  const CsvTable t = read_csv(cfg.data_file);
  const int n = static_cast<int>(t.rows.size());
  if (n < 1) throw Error(ErrorCode::SchemaMismatch, "csv has no data rows");

  Dataset ds;
  std::vector<int> cont_cols;
  std::vector<int> disc_cols;
  for (const std::string& nm : cfg.covariates) {
    const bool disc = std::find(cfg.discrete_covariates.begin(), cfg.discrete_covariates.end(),
                                nm) != cfg.discrete_covariates.end();
    (disc ? disc_cols : cont_cols).push_back(column_index(t, nm));
  }
  ds.x_cont.resize(n, static_cast<Eigen::Index>(cont_cols.size()));
  for (int i = 0; i < n; ++i)
    for (size_t j = 0; j < cont_cols.size(); ++j)
      ds.x_cont(i, static_cast<Eigen::Index>(j)) =
          parse_cell(t.rows[static_cast<size_t>(i)][static_cast<size_t>(cont_cols[j])],
                     static_cast<size_t>(i), t.header[static_cast<size_t>(cont_cols[j])]);
  for (const std::string& nm : cfg.covariates)
    if (std::find(cfg.discrete_covariates.begin(), cfg.discrete_covariates.end(), nm) ==
        cfg.discrete_covariates.end())
      ds.x_names.push_back(nm);

  if (!disc_cols.empty()) {
    // fuse all discrete covariate columns into one composite label
    std::map<std::string, int> codes;
    ds.x_disc.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::string key;
      for (size_t j = 0; j < disc_cols.size(); ++j) {
        if (j) key += "|";
        key += t.rows[static_cast<size_t>(i)][static_cast<size_t>(disc_cols[j])];
      }
      auto [it, fresh] = codes.emplace(key, static_cast<int>(codes.size()));
      ds.x_disc[static_cast<size_t>(i)] = it->second;
      if (fresh) {
        ds.x_labels.push_back(key);
        double value = std::numeric_limits<double>::quiet_NaN();
        if (disc_cols.size() == 1) {
          try {
            value = std::stod(key);
          } catch (...) {
          }
        }
        ds.x_disc_values.push_back(value);
      }
    }
    std::string fused;
    for (size_t j = 0; j < disc_cols.size(); ++j) {
      if (j) fused += "|";
      fused += t.header[static_cast<size_t>(disc_cols[j])];
    }
    ds.x_names.push_back(fused);
  }

  const int ycol = column_index(t, cfg.response);
  if (cfg.response_discrete || cfg.family != Family::GaussianLinear) {
    // discrete responses are integer-labeled; codes equal the numeric value
    int max_v = cfg.family == Family::Binomial ? cfg.trials : 1;
    ds.y_disc.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double v = parse_cell(t.rows[static_cast<size_t>(i)][static_cast<size_t>(ycol)],
                                  static_cast<size_t>(i), cfg.response);
      const int k = static_cast<int>(std::llround(v));
      if (std::abs(v - k) > 1e-9 || k < 0 || k > max_v)
        throw Error(ErrorCode::SchemaMismatch,
                    "discrete response out of range at row " + std::to_string(i));
      ds.y_disc[static_cast<size_t>(i)] = k;
    }
    for (int k = 0; k <= max_v; ++k) ds.y_labels.push_back(std::to_string(k));
  } else {
    ds.y_cont.resize(n, 1);
    for (int i = 0; i < n; ++i)
      ds.y_cont(i, 0) = parse_cell(t.rows[static_cast<size_t>(i)][static_cast<size_t>(ycol)],
                                   static_cast<size_t>(i), cfg.response);
  }
  ds.y_names = {cfg.response};
  CovariatePartition all;
  for (int k = 0; k < ds.n_x_indices(); ++k) all.g_only.push_back(k);
  validate(ds, all);
  return ds;
}

int run_command(RunConfig cfg) {
  try {
    if (cfg.command == "simulate" || cfg.command == "bootstrap") return run_simulate(cfg);
    if (cfg.command == "breakdown") return run_breakdown(cfg);
    if (cfg.command == "fit") return run_fit(cfg);
    throw Error(ErrorCode::Config, "unknown command: " + cfg.command);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::Config: return 2;
      case ErrorCode::Io:
      case ErrorCode::SchemaMismatch:
      case ErrorCode::NonFiniteValue:
      case ErrorCode::DimensionMismatch:
      case ErrorCode::IndexOutOfRange: return 3;
      default: return 4;
    }
  }
}

}  // namespace mcd

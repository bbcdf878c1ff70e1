#include "mcd/sim_harness.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "mcd/parallel.hpp"

namespace mcd {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// pooled leave-one-out log-likelihood CV for a univariate KDE, standardized
// scale; used for the marginal estimator's residual bandwidth
BandwidthChoice cv_loglik_1d(const Eigen::VectorXd& v, const std::vector<double>& grid) {
  const Eigen::Index n = v.size();
  const double mu = v.mean();
  const double sd = std::max(std::sqrt((v.array() - mu).square().sum() / (n - 1.0)), 1e-12);
  double best = -std::numeric_limits<double>::infinity();
  BandwidthChoice out;
  for (double c : grid) {
    const double h = c * sd;
    double ll = 0.0;
    bool all_floor = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double z = (v[i] - v[j]) / h;
        acc += std::exp(-0.5 * z * z);
      }
      double dens = acc / ((n - 1.0) * h * std::sqrt(2.0 * M_PI));
      if (dens > kDensityFloor)
        all_floor = false;
      else
        dens = kDensityFloor;
      ll += std::log(dens);
    }
    if (ll >= best) {
      best = ll;
      out.value = c;
      out.degenerate = all_floor;
    }
  }
  return out;
}

enum class DensityKind { Uncentered, Joint, Homoscedastic };

DensityKind density_kind_for(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::HDc:
    case EstimatorTag::NEDc: return DensityKind::Joint;
    case EstimatorTag::HDh:
    case EstimatorTag::NEDh: return DensityKind::Homoscedastic;
    default: return DensityKind::Uncentered;
  }
}

struct RepSlot {
  Eigen::VectorXd theta;
  Eigen::VectorXd corrected;
  Eigen::VectorXd covered;  // 0/1 per coordinate
  double seconds = 0.0;
  bool ok = false;
};

}  // namespace

Eigen::MatrixXd generate_covariates(int n, RngStream& rng) {
  if (n < 1) throw Error(ErrorCode::Domain, "generate_covariates: n must be >= 1");
  Eigen::MatrixXd mix = Eigen::MatrixXd::Constant(3, 3, 0.25);
  mix.diagonal().setOnes();
  mix *= std::sqrt(8.0) / 3.0;
  Eigen::MatrixXd u(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) u(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd x = u * mix;
  for (int i = 0; i < n; ++i) x(i, 2) = x(i, 2) > 0.0 ? 1.0 : 0.0;
  return x;
}

Dataset make_sim_dataset(const Eigen::MatrixXd& X, Family family, int m_trials) {
  Dataset ds;
  const int n = static_cast<int>(X.rows());
  ds.x_cont = X.leftCols(2);
  ds.x_disc.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) ds.x_disc[static_cast<size_t>(i)] = X(i, 2) > 0.5 ? 1 : 0;
  ds.x_labels = {"0", "1"};
  ds.x_disc_values = {0.0, 1.0};
  ds.x_names = {"x1", "x2", "x3"};
  if (family == Family::GaussianLinear) {
    ds.y_cont = Eigen::MatrixXd::Zero(n, 1);
    ds.y_names = {"y"};
  } else {
    const int m = family == Family::Logistic ? 1 : m_trials;
    ds.y_disc.assign(static_cast<size_t>(n), 0);
    for (int k = 0; k <= m; ++k) ds.y_labels.push_back(std::to_string(k));
    ds.y_names = {"y"};
  }
  return ds;
}

Eigen::VectorXd simulate_response(const ModelSpec& spec, const ThetaVector& theta,
                                  const Eigen::MatrixXd& design, RngStream& rng) {
  Eigen::VectorXd y(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    y[i] = sample(spec, theta, design.row(i).transpose(), rng);
  return y;
}

std::vector<int> draw_outlier_indices(int n, int k, RngStream rng) {
  if (k >= n) throw Error(ErrorCode::IncompatibleScheme, "outlier count must be below n");
  std::vector<int> pool(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  pool.resize(static_cast<size_t>(k));
  return pool;
}

ContaminationResult apply_contamination(const Eigen::VectorXd& y, const Eigen::VectorXd& mu_true,
                                        const Eigen::VectorXd& x1, const ContaminationScheme& scheme,
                                        const std::vector<int>& frozen_indices) {
  ContaminationResult out;
  out.y = y;
  if (scheme.mode == ContaminationMode::None || scheme.k == 0) return out;
  if (scheme.mode != ContaminationMode::UniformOverX &&
      scheme.mode != ContaminationMode::LocalizedAtX1)
    throw Error(ErrorCode::IncompatibleScheme, "response contamination expects a linear scenario");
  if (scheme.k >= y.size())
    throw Error(ErrorCode::IncompatibleScheme, "outlier count must be below n");

  if (scheme.mode == ContaminationMode::UniformOverX) {
    out.indices = frozen_indices;
  } else {
    std::vector<std::pair<double, int>> dist;
    for (Eigen::Index i = 0; i < x1.size(); ++i)
      dist.emplace_back(std::abs(x1[i] + 0.5), static_cast<int>(i));
    std::sort(dist.begin(), dist.end());
    for (int i = 0; i < scheme.k; ++i) out.indices.push_back(dist[static_cast<size_t>(i)].second);
    std::sort(out.indices.begin(), out.indices.end());
  }
  for (int i : out.indices) out.y[i] = mu_true[i] + scheme.z;
  return out;
}

Eigen::MatrixXd binomial_exact_distributions(const ModelSpec& spec, const ThetaVector& theta,
                                             const Eigen::MatrixXd& design,
                                             const Eigen::VectorXd& x1,
                                             const ContaminationScheme& scheme) {
  const int m = spec.m_trials;
  const Eigen::Index n = design.rows();
  int local_row = -1;
  if (scheme.mode == ContaminationMode::BinomialLocal) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = std::abs(x1[i] + 0.5);
      if (d < best) {
        best = d;
        local_row = static_cast<int>(i);
      }
    }
  }
  Eigen::MatrixXd probs(n, m + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eta = design.row(i).dot(theta.head(spec.n_regressors()));
    const double p = 1.0 / (1.0 + std::exp(-eta));
    double a = 0.0;
    if (scheme.mode == ContaminationMode::BinomialUniform) a = scheme.alpha;
    if (scheme.mode == ContaminationMode::BinomialLocal && static_cast<int>(i) == local_row)
      a = scheme.alpha;
    for (int k = 0; k <= m; ++k) {
      const double lp = log_choose(m, k) + k * std::log(p) + (m - k) * std::log1p(-p);
      probs(i, k) = (1.0 - a) * std::exp(lp) + (k == scheme.category ? a : 0.0);
    }
  }
  return probs;
}

ThetaVector StudyConfig::true_theta() const {
  if (family == Family::GaussianLinear) {
    ThetaVector t(true_beta.size() + 1);
    t.head(true_beta.size()) = true_beta;
    t[true_beta.size()] = true_log_sigma;
    return t;
  }
  return true_beta;
}

ModelSpec StudyConfig::model() const {
  ModelSpec spec;
  spec.family = family;
  spec.m_trials = family == Family::Binomial ? binom_trials : 1;
  spec.design_cols = {0, 1, 2};
  return spec;
}

StudySummary run_study(const StudyConfig& config) {
  if (config.estimators.empty()) throw Error(ErrorCode::Config, "no estimators requested");
  if (config.seed == 0) throw Error(ErrorCode::Config, "a nonzero seed is required");
  const ModelSpec spec = config.model();
  const ThetaVector theta_star = config.true_theta();
  const int p = spec.theta_dim();
  if (theta_star.size() != p) throw Error(ErrorCode::Config, "true parameter dimension mismatch");
  const int R = config.replications;
  const int n = config.n;
  const bool contaminated = config.contamination.mode != ContaminationMode::None;
  const bool binom_mode = config.contamination.mode == ContaminationMode::BinomialUniform ||
                          config.contamination.mode == ContaminationMode::BinomialLocal;
  if (binom_mode && config.family != Family::Binomial)
    throw Error(ErrorCode::IncompatibleScheme, "binomial contamination requires the binomial family");
  if (contaminated && !binom_mode && config.family != Family::GaussianLinear)
    throw Error(ErrorCode::IncompatibleScheme, "residual contamination requires the linear model");
  for (EstimatorTag tag : config.estimators) {
    const bool centers = density_kind_for(tag) != DensityKind::Uncentered;
    if (config.family != Family::GaussianLinear && tag_is_disparity(tag) &&
        (centers || tag_is_marginal(tag)))
      throw Error(ErrorCode::Config, "centered/marginal estimators require a continuous response");
    if (config.family != Family::GaussianLinear && tag == EstimatorTag::Huber)
      throw Error(ErrorCode::Config, "huber baseline requires a continuous response");
  }
  if (binom_mode && config.bootstrap_B > 0)
    throw Error(ErrorCode::Config, "exact-distribution binomial studies do not bootstrap");

  RngStream master(config.seed);
  std::vector<int> frozen_idx;
  if (config.contamination.mode == ContaminationMode::UniformOverX)
    frozen_idx = draw_outlier_indices(n, config.contamination.k, master.child("outlier_idx"));

  const size_t n_tags = config.estimators.size();
  std::vector<std::vector<RepSlot>> slots(n_tags, std::vector<RepSlot>(static_cast<size_t>(R)));

  auto run_rep = [&](int r) {
    RngStream rep = master.child("rep").child(static_cast<uint64_t>(r) + 1);
    RngStream cov_rng = rep.child("cov");
    const Eigen::MatrixXd X = generate_covariates(n, cov_rng);
    Dataset ds = make_sim_dataset(X, config.family, config.binom_trials);
    const Eigen::MatrixXd design = design_matrix(spec, ds);

    Eigen::MatrixXd exact_probs;
    if (binom_mode) {
      exact_probs =
          binomial_exact_distributions(spec, theta_star, design, X.col(0), config.contamination);
    } else {
      RngStream resp_rng = rep.child("resp");
      const Eigen::VectorXd y_clean = simulate_response(spec, theta_star, design, resp_rng);
      if (config.family == Family::GaussianLinear) {
        ds.y_cont.col(0) = y_clean;
      } else {
        for (int i = 0; i < n; ++i)
          ds.y_disc[static_cast<size_t>(i)] = static_cast<int>(y_clean[i]);
      }
    }

    // bandwidths come from the data before outliers are injected
    std::map<DensityKind, SelectedBandwidths> bench_bw;
    double marginal_h = 0.0;
    if (!binom_mode) {
      for (EstimatorTag tag : config.estimators) {
        if (!tag_is_disparity(tag) || tag_is_marginal(tag)) continue;
        const DensityKind kind = density_kind_for(tag);
        if (bench_bw.count(kind)) continue;
        const CovariatePartition part = partition_for_tag(tag, ds);
        bench_bw.emplace(kind, select_bandwidths(ds, part, config.grid, config.cm_rule));
      }
      for (EstimatorTag tag : config.estimators) {
        if (!tag_is_marginal(tag)) continue;
        const ThetaVector mle = mle_fit(spec, ds);
        const Eigen::VectorXd resid =
            response_vector(spec, ds) - design * mle.head(spec.n_regressors());
        const BandwidthChoice c = cv_loglik_1d(resid, config.grid.values());
        const double sd =
            std::sqrt((resid.array() - resid.mean()).square().sum() / (resid.size() - 1.0));
        marginal_h = c.value * std::max(sd, 1e-12);
        break;
      }
    }

    if (contaminated && !binom_mode) {
      const Eigen::VectorXd mu_true = design * theta_star.head(spec.n_regressors());
      const ContaminationResult cr = apply_contamination(ds.y_cont.col(0), mu_true, X.col(0),
                                                         config.contamination, frozen_idx);
      ds.y_cont.col(0) = cr.y;
    }

    // densities fit on the (possibly contaminated) data with the clean-data
    // bandwidths; HD and NED share the fit within a variant
    std::map<DensityKind, DensityEstimate> densities;
    for (auto& [kind, bw] : bench_bw) {
      EstimatorTag probe = kind == DensityKind::Joint        ? EstimatorTag::NEDc
                           : kind == DensityKind::Homoscedastic ? EstimatorTag::NEDh
                                                                : EstimatorTag::NED;
      densities.emplace(kind, DensityEstimate::fit(ds, partition_for_tag(probe, ds), bw.set));
    }

    for (size_t t = 0; t < n_tags; ++t) {
      const EstimatorTag tag = config.estimators[t];
      const std::string label = tag_label(tag, config.family);
      RngStream tag_rng = rep.child(RngStream::hash(label));
      RepSlot& slot = slots[t][static_cast<size_t>(r)];
      try {
        FitResult fr;
        FitContext ctx;
        if (binom_mode) {
          const ThetaVector init = mle_fit_weighted(spec, design, exact_probs);
          if (tag == EstimatorTag::MLE) {
            fr.theta = init;
            fr.tag = label;
          } else {
            DisparitySpec dspec{tag_ckind(tag), config.mc_points, config.aggregation,
                                tag_rng.child("mc")};
            fr = fit_mde_exact(exact_probs, design, spec, dspec, init, config.nm);
          }
        } else if (tag == EstimatorTag::MLE) {
          fr = fit_mle(ds, spec);
        } else if (tag == EstimatorTag::Huber) {
          fr = fit_huber(ds, spec);
        } else if (tag_is_marginal(tag)) {
          const ThetaVector init = mle_fit(spec, ds);
          fr = fit_marginal(ds, spec, tag_ckind(tag), marginal_h, init, config.nm);
        } else {
          const DensityKind kind = density_kind_for(tag);
          const CovariatePartition part = partition_for_tag(tag, ds);
          DisparitySpec dspec{tag_ckind(tag), config.mc_points, config.aggregation,
                              tag_rng.child("mc")};
          const ThetaVector init = mle_fit(spec, ds);
          fr = fit_mde(densities.at(kind), ds, part, spec, dspec, init, config.nm);
        }
        slot.theta = fr.theta;
        slot.seconds = fr.seconds;
        slot.ok = true;

        if (config.bootstrap_B > 0) {
          ctx.ds = &ds;
          ctx.part = partition_for_tag(tag, ds);
          ctx.model = spec;
          ctx.tag = tag;
          ctx.dspec = DisparitySpec{tag_ckind(tag), config.mc_points, config.aggregation,
                                    tag_rng.child("mc")};
          ctx.theta_hat = fr.theta;
          ctx.nm = config.nm;
          ctx.marginal_bandwidth = marginal_h;
          const DensityKind kind = density_kind_for(tag);
          if (tag_is_disparity(tag) && !tag_is_marginal(tag)) {
            ctx.bw = bench_bw.at(kind).set;
            ctx.density = &densities.at(kind);
          }
          const BootstrapResult br = run_bootstrap(ctx, config.bootstrap_B, tag_rng.child("boot"));
          slot.corrected = br.theta_corrected;
          slot.covered.resize(p);
          for (int j = 0; j < p; ++j)
            slot.covered[j] =
                (br.ci_lo[j] <= theta_star[j] && theta_star[j] <= br.ci_hi[j]) ? 1.0 : 0.0;
        }
      } catch (const Error&) {
        slot.ok = false;
      }
    }
  };

  parallel_for(R, config.threads, run_rep);

  StudySummary out;
  out.replications = R;
  out.family = config.family;
  out.param_names = spec.param_names();
  out.with_bootstrap = config.bootstrap_B > 0;
  for (size_t t = 0; t < n_tags; ++t) {
    EstimatorStudy es;
    es.tag = config.estimators[t];
    es.label = tag_label(es.tag, config.family);
    int ok = 0;
    for (int r = 0; r < R; ++r)
      if (slots[t][static_cast<size_t>(r)].ok) ++ok;
    es.failures = R - ok;
    es.estimates.resize(ok, p);
    Eigen::MatrixXd corrected(ok, p), covered(ok, p);
    double secs = 0.0;
    int row = 0;
    for (int r = 0; r < R; ++r) {
      const RepSlot& s = slots[t][static_cast<size_t>(r)];
      if (!s.ok) continue;
      es.estimates.row(row) = s.theta.transpose();
      if (config.bootstrap_B > 0) {
        corrected.row(row) = s.corrected.transpose();
        covered.row(row) = s.covered.transpose();
      }
      secs += s.seconds;
      ++row;
    }
    if (ok > 0) {
      es.mean = es.estimates.colwise().mean();
      es.sd.resize(p);
      for (int j = 0; j < p; ++j) {
        const double ss = (es.estimates.col(j).array() - es.mean[j]).square().sum();
        es.sd[j] = ok > 1 ? std::sqrt(ss / (ok - 1.0)) : 0.0;
      }
      es.mean_seconds = secs / ok;
      if (config.bootstrap_B > 0) {
        es.corrected_mean = corrected.colwise().mean();
        es.corrected_sd.resize(p);
        for (int j = 0; j < p; ++j) {
          const double ss = (corrected.col(j).array() - es.corrected_mean[j]).square().sum();
          es.corrected_sd[j] = ok > 1 ? std::sqrt(ss / (ok - 1.0)) : 0.0;
        }
        es.coverage = covered.colwise().mean();
      }
    }
    out.estimators.push_back(std::move(es));
  }
  return out;
}

BreakdownCurves breakdown_curve(const StudyConfig& config, const std::vector<double>& z_grid) {
  BreakdownCurves out;
  out.grid = z_grid;
  for (double z : z_grid) {
    StudyConfig c = config;
    const bool binom = config.contamination.mode == ContaminationMode::BinomialUniform ||
                       config.contamination.mode == ContaminationMode::BinomialLocal;
    if (binom)
      c.contamination.alpha = z;
    else
      c.contamination.z = z;
    out.summaries.push_back(run_study(c));
  }
  return out;
}

}  // namespace mcd

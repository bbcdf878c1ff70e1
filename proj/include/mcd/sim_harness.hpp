#ifndef MCD_SIM_HARNESS_HPP
#define MCD_SIM_HARNESS_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mcd/bandwidth.hpp"
#include "mcd/bootstrap_inference.hpp"
#include "mcd/estimators.hpp"

namespace mcd {

enum class ContaminationMode {
  None,
  UniformOverX,     // scenario 1: k residuals set to z at random-but-fixed rows
  LocalizedAtX1,    // scenario 2: k residuals set to z at rows with X_1 nearest -0.5
  BinomialUniform,  // alpha-mixture onto category 8 at every covariate point
  BinomialLocal,    // alpha-mixture at the single point with X_1 nearest -0.5
};

struct ContaminationScheme {
  ContaminationMode mode = ContaminationMode::None;
  int k = 0;         // outlier count, k < n
  double z = 0.0;    // outlier residual value
  double alpha = 0;  // binomial mixture fraction in [0,1)
  int category = 8;  // binomial outlier outcome
};

// Two correlated continuous covariates plus a dichotomized third column.
Eigen::MatrixXd generate_covariates(int n, RngStream& rng);

// Dataset wrapper for generated covariates: continuous columns 0..1, binary
// third column as the discrete covariate; responses filled per family.
Dataset make_sim_dataset(const Eigen::MatrixXd& X, Family family, int m_trials = 8);

Eigen::VectorXd simulate_response(const ModelSpec& spec, const ThetaVector& theta,
                                  const Eigen::MatrixXd& design, RngStream& rng);

struct ContaminationResult {
  Eigen::VectorXd y;
  std::vector<int> indices;
};
// Linear scenarios: sets the residual (y - mu_true) to z at the selected rows.
// Scenario 1 uses the caller-supplied frozen indices; scenario 2 picks the k
// rows with first covariate nearest -0.5.
ContaminationResult apply_contamination(const Eigen::VectorXd& y, const Eigen::VectorXd& mu_true,
                                        const Eigen::VectorXd& x1, const ContaminationScheme& scheme,
                                        const std::vector<int>& frozen_indices);
// draw scenario-1 indices once per study
std::vector<int> draw_outlier_indices(int n, int k, RngStream rng);

// Exact contaminated conditional distributions for the binomial studies
// (n x (m+1) probability rows).
Eigen::MatrixXd binomial_exact_distributions(const ModelSpec& spec, const ThetaVector& theta,
                                             const Eigen::MatrixXd& design,
                                             const Eigen::VectorXd& x1,
                                             const ContaminationScheme& scheme);

struct StudyConfig {
  Family family = Family::GaussianLinear;
  int n = 31;
  int replications = 500;
  std::vector<EstimatorTag> estimators;
  Eigen::VectorXd true_beta;       // intercept first
  double true_log_sigma = 0.0;     // GaussianLinear
  int binom_trials = 8;
  bool binom_exact = true;         // expected-frequency mode for binomial contamination
  ContaminationScheme contamination;
  int mc_points = 101;
  Aggregation aggregation = Aggregation::AverageOverXi;
  BandwidthGrid grid;
  CmRule cm_rule = CmRule::DensityLogLik;
  int bootstrap_B = 0;             // > 0 enables bias correction + coverage
  uint64_t seed = 0;
  int threads = 1;
  NelderMeadOptions nm;

  ThetaVector true_theta() const;
  ModelSpec model() const;
};

struct EstimatorStudy {
  EstimatorTag tag;
  std::string label;
  Eigen::VectorXd mean, sd;
  Eigen::VectorXd corrected_mean;  // filled when bootstrap_B > 0
  Eigen::VectorXd corrected_sd;
  Eigen::VectorXd coverage;
  double mean_seconds = 0.0;
  int failures = 0;
  Eigen::MatrixXd estimates;       // converged replications x p
};

struct StudySummary {
  std::vector<EstimatorStudy> estimators;
  int replications = 0;
  std::vector<std::string> param_names;
  Family family = Family::GaussianLinear;
  bool with_bootstrap = false;
};

StudySummary run_study(const StudyConfig& config);

struct BreakdownCurves {
  std::vector<double> grid;             // z values (or alpha for binomial modes)
  std::vector<StudySummary> summaries;  // one per grid value
};

BreakdownCurves breakdown_curve(const StudyConfig& config, const std::vector<double>& z_grid);

}  // namespace mcd

#endif

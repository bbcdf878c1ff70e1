#ifndef MCD_BOOTSTRAP_INFERENCE_HPP
#define MCD_BOOTSTRAP_INFERENCE_HPP

#include <Eigen/Dense>
#include <optional>

#include "mcd/estimators.hpp"
#include "mcd/kernels_density.hpp"

namespace mcd {

struct BootstrapResult {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd theta_corrected;  // 2 theta_hat - mean(replicates)
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lo, ci_hi;     // theta_corrected -/+ 1.96 se
  int B = 0;                        // requested replicate count
  Eigen::MatrixXd replicates;       // (B - failures) x p
  int failures = 0;
};

// bias correction and interval arithmetic from a replicate matrix
BootstrapResult assemble_bootstrap(const Eigen::VectorXd& theta_hat,
                                   const Eigen::MatrixXd& replicates, int requested_B,
                                   int failures);

// Everything needed to refit the original estimator on resampled responses.
struct FitContext {
  const Dataset* ds = nullptr;
  CovariatePartition part;
  ModelSpec model;
  EstimatorTag tag = EstimatorTag::MLE;
  DisparitySpec dspec;                      // kind/mc_points/aggregation (stream set per replicate)
  BandwidthSet bw;                          // held fixed across replicates
  const DensityEstimate* density = nullptr; // fitted on the original data
  double marginal_bandwidth = 0.0;          // .m estimators
  Eigen::VectorXd theta_hat;
  NelderMeadOptions nm;
  double huber_k = 1.345;
};

// Conditional nonparametric bootstrap: new responses drawn from the fitted
// conditional density at the observed covariates, estimator refit with the
// original bandwidths.  Non-converged replicates are dropped and counted.
BootstrapResult bootstrap_mde(const FitContext& ctx, int B, RngStream rng);

// Residual bootstrap (continuous response) or parametric bootstrap (discrete
// response) for the likelihood/Huber baselines.
BootstrapResult bootstrap_baseline(const FitContext& ctx, int B, RngStream rng);

// dispatches on the context's estimator tag
BootstrapResult run_bootstrap(const FitContext& ctx, int B, RngStream rng);

}  // namespace mcd

#endif

#ifndef MCD_ESTIMATORS_HPP
#define MCD_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "mcd/bandwidth.hpp"
#include "mcd/core_types.hpp"
#include "mcd/disparity.hpp"
#include "mcd/parametric_models.hpp"

namespace mcd {

struct NelderMeadOptions {
  double tol = 1e-6;       // absolute simplex diameter
  int max_iterations = 2000;
  double init_step = 0.1;  // initial simplex offset per coordinate
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& init, const NelderMeadOptions& opts);

// Estimator tags follow the paper-table row labels.
enum class EstimatorTag { MLE, Huber, HD, NED, HDc, NEDc, HDh, NEDh, HDm, NEDm };

std::string tag_label(EstimatorTag tag, Family family);
EstimatorTag parse_tag(const std::string& name);
bool tag_is_disparity(EstimatorTag tag);
bool tag_is_marginal(EstimatorTag tag);
CKind tag_ckind(EstimatorTag tag);
// partition implied by the tag: uncentered (all conditioning), joint (all
// shared) or homoscedastic (all centering)
CovariatePartition partition_for_tag(EstimatorTag tag, const Dataset& ds);

struct FitResult {
  ThetaVector theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  std::string tag;
  double seconds = 0.0;
};

// Minimum disparity fit: density held fixed, Nelder-Mead from init.
FitResult fit_mde(const Dataset& ds, const CovariatePartition& part, const ModelSpec& model,
                  const DisparitySpec& dspec, const BandwidthSet& bw, const ThetaVector& init,
                  const NelderMeadOptions& opts = {});
// same, with a pre-fitted density (lets callers share the fit across kinds)
FitResult fit_mde(const DensityEstimate& density, const Dataset& ds,
                  const CovariatePartition& part, const ModelSpec& model,
                  const DisparitySpec& dspec, const ThetaVector& init,
                  const NelderMeadOptions& opts = {});
// exact-distribution fit (binomial contamination studies)
FitResult fit_mde_exact(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& design,
                        const ModelSpec& model, const DisparitySpec& dspec,
                        const ThetaVector& init, const NelderMeadOptions& opts = {});

// Marginal (hybrid) estimator: kernel density of parametric residuals against
// a zero-mean Gaussian reference whose scale is re-estimated by an inner
// golden-section search over log sigma at every objective evaluation.
FitResult fit_marginal(const Dataset& ds, const ModelSpec& model, CKind kind,
                       double residual_bandwidth, const ThetaVector& init,
                       const NelderMeadOptions& opts = {});

FitResult fit_mle(const Dataset& ds, const ModelSpec& model);

// Huber IRLS with MAD/0.6745 scale, psi tuning k
FitResult fit_huber(const Dataset& ds, const ModelSpec& model, double k = 1.345);

double mad_scale(const Eigen::VectorXd& v);  // median absolute deviation / 0.6745

}  // namespace mcd

#endif

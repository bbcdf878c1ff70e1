#ifndef MCD_DISPARITY_HPP
#define MCD_DISPARITY_HPP

#include <Eigen/Dense>
#include <vector>

#include "mcd/core_types.hpp"
#include "mcd/kernels_density.hpp"
#include "mcd/parametric_models.hpp"
#include "mcd/rng.hpp"

namespace mcd {

enum class CKind { HD, NED };

// C(delta) with the section-3 offsets: NED e^{-d}-1, HD (sqrt(d+1)-1)^2-1
double c_function(CKind kind, double delta);

// residual adjustment diagnostics A1(r) = -C''(r-1) r, A2(r) = C(r-1) - C'(r-1) r,
// A3(r) = C''(r-1) r^2
struct Raf {
  double a1, a2, a3;
};
Raf residual_adjustment(CKind kind, double r);

enum class Aggregation { AverageOverXi, IntegrateOverHhat };

struct DisparitySpec {
  CKind kind = CKind::NED;
  int mc_points = 101;
  Aggregation aggregation = Aggregation::AverageOverXi;
  RngStream stream{0, 0};  // Monte Carlo draws are keyed off this stream
};

// Frozen disparity objective: Monte Carlo draw sets (continuous response) or
// exact support probabilities (discrete response) are fixed at construction,
// so evaluation is deterministic in theta and the optimizer sees a smooth
// surface (common random numbers across theta).
class DisparityObjective {
 public:
  // nonparametric density route
  DisparityObjective(const DisparitySpec& spec, const DensityEstimate& density,
                     const ModelSpec& model, const Dataset& ds, const CovariatePartition& part);
  // exact discrete distributions route (one probability row per observation
  // over the family support)
  DisparityObjective(const DisparitySpec& spec, const ModelSpec& model,
                     const Eigen::MatrixXd& probs, const Eigen::MatrixXd& design);

  double operator()(const ThetaVector& theta) const;
  int dim() const { return model_.theta_dim(); }

 private:
  DisparitySpec spec_;
  ModelSpec model_;
  bool discrete_ = false;
  Eigen::MatrixXd design_;  // n x p
  // discrete route
  Eigen::MatrixXd probs_;  // n x support
  // continuous route
  Eigen::MatrixXd draws_;  // n x M
  Eigen::MatrixXd fvals_;  // n x M
};

// D(f, phi | x, theta): exact sum over the support for discrete families,
// importance-weighted Monte Carlo over mc_points draws from f(.|x) otherwise.
// Draws are deterministic per (spec.stream, x).
double pointwise_disparity(const DisparitySpec& spec, const DensityEstimate& density,
                           const ModelSpec& model, const ThetaVector& theta, const XPoint& x);

// Aggregated objective over the dataset's observed covariates.
double total_disparity(const DisparitySpec& spec, const DensityEstimate& density,
                       const ModelSpec& model, const ThetaVector& theta, const Dataset& ds,
                       const CovariatePartition& part);

}  // namespace mcd

#endif

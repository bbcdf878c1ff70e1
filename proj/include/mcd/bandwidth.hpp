#ifndef MCD_BANDWIDTH_HPP
#define MCD_BANDWIDTH_HPP

#include <Eigen/Dense>
#include <vector>

#include "mcd/core_types.hpp"
#include "mcd/kernels_density.hpp"

namespace mcd {

// Candidate bandwidths on the standardized scale (each candidate multiplies
// the per-column sample standard deviation of whatever block is smoothed).
struct BandwidthGrid {
  double lo = 0.05;
  double hi = 5.0;
  int size = 15;
  std::vector<double> values() const;
};

struct BandwidthChoice {
  double value = 0.0;    // standardized scale, element of the grid
  bool degenerate = false;
};

// Leave-one-out cross-validation of the Nadaraya-Watson squared error over the
// centering covariates.  With discrete levels present each level is
// cross-validated separately and the winners averaged.  Ties break toward the
// larger bandwidth.
BandwidthChoice cv_nw_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                const std::vector<double>& grid);

// Leave-one-out log likelihood of the covariate density over the conditioning
// covariates (argmax).
BandwidthChoice cv_marginal_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                      const std::vector<double>& grid);

// Leave-one-out log likelihood of the joint residual/covariate density, with
// the centering fit and conditioning bandwidth held fixed; selects the
// response bandwidth.  c_m and c_g are in data units (as consumed by
// DensityEstimate::fit); either may be empty for variants without that role.
BandwidthChoice cv_conditional_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                         const Eigen::VectorXd& c_m, const Eigen::VectorXd& c_g,
                                         const std::vector<double>& grid);

// How the centering bandwidth is selected by the study harness.
enum class CmRule {
  DensityLogLik,  // cross-validated log likelihood of the centering covariate density
  NwSse,          // cross-validated Nadaraya-Watson squared error
};

struct SelectedBandwidths {
  BandwidthSet set;       // data units, ready for DensityEstimate::fit
  double cm_std = 0.0;    // standardized-scale scalars actually selected
  double cg_std = 0.0;
  double cy_std = 0.0;
  bool degenerate = false;
};

// Full §-style selection pipeline for a dataset/partition pair: centering
// bandwidth, then conditioning, then response, resolving the standardized
// scalars to per-column data units.
SelectedBandwidths select_bandwidths(const Dataset& ds, const CovariatePartition& part,
                                     const BandwidthGrid& grid, CmRule cm_rule);

// sample standard deviations of the given continuous covariate columns
Eigen::VectorXd column_scales(const Eigen::MatrixXd& m);

}  // namespace mcd

#endif

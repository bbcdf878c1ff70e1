#ifndef MCD_CORE_TYPES_HPP
#define MCD_CORE_TYPES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcd/errors.hpp"

namespace mcd {

// Observations with mixed continuous/discrete response and covariate blocks.
// Discrete columns are stored as integer codes into a label dictionary;
// multiple discrete source columns are fused into one composite label at
// ingestion so that kernel formulas can match the full discrete tuple with a
// single indicator.
struct Dataset {
  Eigen::MatrixXd y_cont;            // n x d_y
  std::vector<int> y_disc;           // empty or length n, codes into y_labels
  Eigen::MatrixXd x_cont;            // n x d_x
  std::vector<int> x_disc;           // empty or length n, codes into x_labels
  std::vector<std::string> y_labels; // code -> original label
  std::vector<std::string> x_labels;
  std::vector<double> x_disc_values; // numeric value per code (for design use)
  std::vector<std::string> x_names;  // continuous covariate names, then the discrete one
  std::vector<std::string> y_names;

  int n() const { return static_cast<int>(std::max<Eigen::Index>(y_cont.rows(), x_cont.rows())); }
  int dx() const { return static_cast<int>(x_cont.cols()); }
  int dy() const { return static_cast<int>(y_cont.cols()); }
  bool has_x_disc() const { return !x_disc.empty(); }
  bool has_y_disc() const { return !y_disc.empty(); }
  // covariate index space: 0..dx-1 are continuous columns, dx is the
  // discrete label column when present
  int n_x_indices() const { return dx() + (has_x_disc() ? 1 : 0); }
  int x_disc_index() const { return dx(); }
  int n_y_levels() const { return static_cast<int>(y_labels.size()); }
  double x_disc_value(int row) const { return x_disc_values[static_cast<size_t>(x_disc[row])]; }
};

// Partition of covariate indices into centering-only (x^m), shared (x^s) and
// conditioning-only (x^g) roles.  Centering set = m_only ∪ shared, conditioning
// set = shared ∪ g_only.  Indices not listed anywhere are simply unused by the
// density machinery (they may still appear in a parametric design).
struct CovariatePartition {
  std::vector<int> m_only;
  std::vector<int> shared;
  std::vector<int> g_only;

  std::vector<int> centering() const;
  std::vector<int> conditioning() const;
};

enum class Variant { Uncentered, Homoscedastic, Joint, General };

const char* variant_name(Variant v);

// Returns the validated pair; throws Error on any invariant violation.
struct CheckedData {
  const Dataset* dataset;
  const CovariatePartition* partition;
};
CheckedData validate(const Dataset& ds, const CovariatePartition& part);

// Maps a partition to its estimator variant given the full covariate index set
// size (continuous columns plus the discrete label column when present).
Variant variant_of(const CovariatePartition& part, int n_covariate_indices);

}  // namespace mcd

#endif

#ifndef MCD_KERNELS_DENSITY_HPP
#define MCD_KERNELS_DENSITY_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mcd/core_types.hpp"
#include "mcd/rng.hpp"

namespace mcd {

inline constexpr double kDensityFloor = 1e-300;

// standard multivariate Gaussian density at u
double gaussian_kernel(const Eigen::VectorXd& u);

// Product-Gaussian KDE over a continuous block with an indicator on discrete
// labels: (1/(n * prod c_j)) sum_i K((q - X_i) / c) I(label_i == qlabel).
// Pass empty labels / qlabel = -1 when there is no discrete part.
double kde(const Eigen::MatrixXd& points, const std::vector<int>& labels,
           const Eigen::VectorXd& widths, const Eigen::VectorXd& query, int qlabel);

// Kernel-weighted mean of y restricted to matching discrete labels.
Eigen::VectorXd nadaraya_watson(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                const Eigen::MatrixXd& y, const Eigen::VectorXd& widths,
                                const Eigen::VectorXd& query, int qlabel);

// Per-column bandwidths in data units (one entry per continuous column of the
// corresponding role; c_y has one entry per continuous response column).
struct BandwidthSet {
  Eigen::VectorXd c_m;
  Eigen::VectorXd c_g;
  Eigen::VectorXd c_y;
  bool degenerate = false;  // set when a cross-validation hit its floor everywhere
};

// A covariate query point: the full continuous vector plus the discrete code
// (-1 when the dataset has no discrete covariate).
struct XPoint {
  Eigen::VectorXd xc;
  int xd = -1;
};

struct YSample {
  Eigen::MatrixXd y_cont;   // count x d_y
  std::vector<int> y_disc;  // empty or length count
};

// Fitted nonparametric conditional density f(y | x) in one of four variants:
// uncentered, homoscedastic, jointly centered+conditioned, or general.
// Immutable after fit; evaluation and sampling are safe from multiple threads.
class DensityEstimate {
 public:
  static DensityEstimate fit(const Dataset& ds, const CovariatePartition& part,
                             const BandwidthSet& bw);

  Variant variant() const { return variant_; }
  const BandwidthSet& bandwidths() const { return bw_; }
  const Eigen::MatrixXd& residuals() const { return resid_; }
  const Eigen::MatrixXd& fitted_centers() const { return mhat_data_; }
  int n() const { return n_; }
  int dy_cont() const { return static_cast<int>(resid_.cols()); }
  bool has_y_disc() const { return !ydisc_.empty(); }
  int n_y_levels() const { return n_y_levels_; }

  // conditional density of (y1, y2code) given x; y2code = -1 when the dataset
  // has no discrete response
  double eval(const Eigen::VectorXd& y1, int y2code, const XPoint& x) const;
  // univariate continuous response convenience
  double eval1(double y, const XPoint& x) const;
  // discrete-only response convenience
  double eval_disc(int y2code, const XPoint& x) const;

  // Nadaraya-Watson center at x (zero vector for the uncentered variant)
  Eigen::VectorXd center(const XPoint& x) const;

  // unnormalized donor weights at x (conditioning kernel, uniform for the
  // homoscedastic variant); throws zero-conditioning-density on underflow
  Eigen::VectorXd donor_weights(const XPoint& x) const;

  YSample sample(const XPoint& x, int count, RngStream& rng) const;

 private:
  DensityEstimate() = default;

  Variant variant_ = Variant::Uncentered;
  int n_ = 0;
  int n_y_levels_ = 0;
  BandwidthSet bw_;
  // role views of the data
  Eigen::MatrixXd cen_x_, con_x_;     // continuous columns of each role
  std::vector<int> cen_lab_, con_lab_;  // discrete labels per role (empty if none)
  std::vector<int> cen_cols_, con_cols_;  // continuous column indices of each role
  bool cen_has_disc_ = false, con_has_disc_ = false;
  Eigen::MatrixXd ydata_;             // n x d_y raw continuous responses
  std::vector<int> ydisc_;            // discrete response codes (empty if none)
  Eigen::MatrixXd resid_;             // n x d_y cached residuals (== ydata_ when uncentered)
  Eigen::MatrixXd mhat_data_;         // n x d_y cached NW fits at the data points

  Eigen::VectorXd role_query(const XPoint& x, const std::vector<int>& cols) const;
  int role_label(const XPoint& x, bool has_disc) const;
};

// Parameter-dependent residual density of the marginal (hybrid) method:
// f(e; theta) = (1/(n c)) sum_i K((e - E_i(theta)) / c) with
// E_i(theta) = Y_i - m(X_i, theta) supplied by the caller as a residual vector.
class MarginalResidualDensity {
 public:
  MarginalResidualDensity(double bandwidth) : c_(bandwidth) {}
  double bandwidth() const { return c_; }
  double eval(const Eigen::VectorXd& residuals, double e) const;

 private:
  double c_;
};

}  // namespace mcd

#endif

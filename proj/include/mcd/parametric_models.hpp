#ifndef MCD_PARAMETRIC_MODELS_HPP
#define MCD_PARAMETRIC_MODELS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcd/core_types.hpp"
#include "mcd/rng.hpp"

namespace mcd {

enum class Family { GaussianLinear, Logistic, Binomial };

using ThetaVector = Eigen::VectorXd;

// A conditional parametric family phi(y | x, theta).  The design map takes a
// covariate point to the regressor vector with an intercept prepended;
// design_cols lists covariate indices (continuous columns by index, the
// discrete column contributing its numeric label value).
struct ModelSpec {
  Family family = Family::GaussianLinear;
  int m_trials = 1;              // Binomial only
  std::vector<int> design_cols;  // covariate indices entering the design

  int n_regressors() const { return 1 + static_cast<int>(design_cols.size()); }
  // GaussianLinear appends log sigma after the regression coefficients
  int theta_dim() const {
    return n_regressors() + (family == Family::GaussianLinear ? 1 : 0);
  }
  std::vector<std::string> param_names() const;
  int support_size() const;  // 2 for Logistic, m+1 for Binomial, 0 for continuous

  Eigen::VectorXd regressors(const Dataset& ds, int row) const;
  Eigen::VectorXd regressors_at(const Eigen::VectorXd& x_cont, double x_disc_value) const;
};

ModelSpec default_model(Family family, const Dataset& ds, int m_trials = 8);

double log_density(const ModelSpec& spec, const ThetaVector& theta, double y,
                   const Eigen::VectorXd& design_row);
double sample(const ModelSpec& spec, const ThetaVector& theta, const Eigen::VectorXd& design_row,
              RngStream& rng);
Eigen::VectorXd score(const ModelSpec& spec, const ThetaVector& theta, double y,
                      const Eigen::VectorXd& design_row);
// (1/n) sum_i E[psi psi^T | x_i] in closed form
Eigen::MatrixXd fisher_information(const ModelSpec& spec, const ThetaVector& theta,
                                   const Eigen::MatrixXd& design);

// design matrix for a whole dataset (n x n_regressors)
Eigen::MatrixXd design_matrix(const ModelSpec& spec, const Dataset& ds);
// responses as a flat vector (continuous column 0, or discrete codes by value)
Eigen::VectorXd response_vector(const ModelSpec& spec, const Dataset& ds);

ThetaVector mle_fit(const ModelSpec& spec, const Dataset& ds);
ThetaVector mle_fit(const ModelSpec& spec, const Eigen::MatrixXd& design,
                    const Eigen::VectorXd& y);
// expected-frequency fit: each row carries a distribution over the discrete
// support {0..m}; maximizes sum_i sum_y w_iy log phi(y | x_i, theta)
ThetaVector mle_fit_weighted(const ModelSpec& spec, const Eigen::MatrixXd& design,
                             const Eigen::MatrixXd& weights);

}  // namespace mcd

#endif

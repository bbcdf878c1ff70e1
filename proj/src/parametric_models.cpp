#include "mcd/parametric_models.hpp"

#include <cmath>

namespace mcd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kLogSigmaFloor = -18.420680743952367;  // log(1e-8)

double log_choose(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

void check_support(const ModelSpec& spec, double y) {
  if (spec.family == Family::GaussianLinear) {
    if (!std::isfinite(y)) throw Error(ErrorCode::SupportViolation, "y must be finite");
    return;
  }
  const int m = spec.family == Family::Logistic ? 1 : spec.m_trials;
  const double r = std::round(y);
  if (std::abs(y - r) > 1e-9 || r < 0 || r > m)
    throw Error(ErrorCode::SupportViolation,
                "y=" + std::to_string(y) + " outside the discrete support {0.." + std::to_string(m) + "}");
}

int trials(const ModelSpec& spec) { return spec.family == Family::Logistic ? 1 : spec.m_trials; }

}  // namespace

std::vector<std::string> ModelSpec::param_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < n_regressors(); ++j) names.push_back("beta" + std::to_string(j));
  if (family == Family::GaussianLinear) names.push_back("log_sigma");
  return names;
}

int ModelSpec::support_size() const {
  if (family == Family::Logistic) return 2;
  if (family == Family::Binomial) return m_trials + 1;
  return 0;
}

Eigen::VectorXd ModelSpec::regressors(const Dataset& ds, int row) const {
  Eigen::VectorXd r(n_regressors());
  r[0] = 1.0;
  for (size_t j = 0; j < design_cols.size(); ++j) {
    const int k = design_cols[j];
    if (ds.has_x_disc() && k == ds.x_disc_index())
      r[static_cast<Eigen::Index>(j) + 1] = ds.x_disc_value(row);
    else
      r[static_cast<Eigen::Index>(j) + 1] = ds.x_cont(row, k);
  }
  return r;
}

Eigen::VectorXd ModelSpec::regressors_at(const Eigen::VectorXd& x_cont, double x_disc_value) const {
  Eigen::VectorXd r(n_regressors());
  r[0] = 1.0;
  for (size_t j = 0; j < design_cols.size(); ++j) {
    const int k = design_cols[j];
    if (k >= x_cont.size())
      r[static_cast<Eigen::Index>(j) + 1] = x_disc_value;
    else
      r[static_cast<Eigen::Index>(j) + 1] = x_cont[k];
  }
  return r;
}

ModelSpec default_model(Family family, const Dataset& ds, int m_trials) {
  ModelSpec spec;
  spec.family = family;
  spec.m_trials = family == Family::Binomial ? m_trials : 1;
  for (int k = 0; k < ds.n_x_indices(); ++k) spec.design_cols.push_back(k);
  return spec;
}

double log_density(const ModelSpec& spec, const ThetaVector& theta, double y,
                   const Eigen::VectorXd& design_row) {
  check_support(spec, y);
  const int p = spec.n_regressors();
  const double eta = design_row.dot(theta.head(p));
  switch (spec.family) {
    case Family::GaussianLinear: {
      const double ls = theta[p];
      const double z = (y - eta) * std::exp(-ls);
      return -0.5 * kLog2Pi - ls - 0.5 * z * z;
    }
    case Family::Logistic:
    case Family::Binomial: {
      const int m = trials(spec);
      const int k = static_cast<int>(std::round(y));
      // log C(m,k) + k*eta - m*log(1+e^eta), stable in both tails
      const double lse = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
      double out = k * eta - m * lse;
      if (spec.family == Family::Binomial) out += log_choose(m, k);
      return out;
    }
  }
  return 0.0;
}

double sample(const ModelSpec& spec, const ThetaVector& theta, const Eigen::VectorXd& design_row,
              RngStream& rng) {
  const int p = spec.n_regressors();
  const double eta = design_row.dot(theta.head(p));
  switch (spec.family) {
    case Family::GaussianLinear:
      return eta + std::exp(theta[p]) * rng.normal();
    case Family::Logistic:
    case Family::Binomial: {
      const int m = trials(spec);
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      int k = 0;
      for (int t = 0; t < m; ++t)
        if (rng.uniform01() < prob) ++k;
      return static_cast<double>(k);
    }
  }
  return 0.0;
}

Eigen::VectorXd score(const ModelSpec& spec, const ThetaVector& theta, double y,
                      const Eigen::VectorXd& design_row) {
  check_support(spec, y);
  const int p = spec.n_regressors();
  const double eta = design_row.dot(theta.head(p));
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.theta_dim());
  switch (spec.family) {
    case Family::GaussianLinear: {
      const double sig = std::exp(theta[p]);
      const double r = y - eta;
      g.head(p) = (r / (sig * sig)) * design_row;
      g[p] = -1.0 + r * r / (sig * sig);
      break;
    }
    case Family::Logistic:
    case Family::Binomial: {
      const int m = trials(spec);
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      g.head(p) = (y - m * prob) * design_row;
      break;
    }
  }
  return g;
}

Eigen::MatrixXd fisher_information(const ModelSpec& spec, const ThetaVector& theta,
                                   const Eigen::MatrixXd& design) {
  const int p = spec.n_regressors();
  const int d = spec.theta_dim();
  const Eigen::Index n = design.rows();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = design.row(i).transpose();
    const double eta = x.dot(theta.head(p));
    switch (spec.family) {
      case Family::GaussianLinear: {
        const double sig = std::exp(theta[p]);
        info.topLeftCorner(p, p) += x * x.transpose() / (sig * sig);
        info(p, p) += 2.0;
        break;
      }
      case Family::Logistic:
      case Family::Binomial: {
        const int m = trials(spec);
        const double prob = 1.0 / (1.0 + std::exp(-eta));
        info += m * prob * (1.0 - prob) * x * x.transpose();
        break;
      }
    }
  }
  return info / static_cast<double>(n);
}

Eigen::MatrixXd design_matrix(const ModelSpec& spec, const Dataset& ds) {
  Eigen::MatrixXd X(ds.n(), spec.n_regressors());
  for (int i = 0; i < ds.n(); ++i) X.row(i) = spec.regressors(ds, i).transpose();
  return X;
}

Eigen::VectorXd response_vector(const ModelSpec& spec, const Dataset& ds) {
  Eigen::VectorXd y(ds.n());
  if (spec.family == Family::GaussianLinear) {
    if (ds.dy() < 1) throw Error(ErrorCode::SchemaMismatch, "continuous response required");
    y = ds.y_cont.col(0);
  } else {
    if (!ds.has_y_disc()) throw Error(ErrorCode::SchemaMismatch, "discrete response required");
    for (int i = 0; i < ds.n(); ++i) {
      const std::string& lab = ds.y_labels[static_cast<size_t>(ds.y_disc[static_cast<size_t>(i)])];
      y[i] = std::stod(lab);
    }
  }
  return y;
}

ThetaVector mle_fit(const ModelSpec& spec, const Dataset& ds) {
  return mle_fit(spec, design_matrix(spec, ds), response_vector(spec, ds));
}

namespace {

ThetaVector newton_glm(const ModelSpec& spec, const Eigen::MatrixXd& X,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                       const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& neg_hess,
                       int p) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto check_saturation = [&](const Eigen::VectorXd& b) {
    // under separation the gradient vanishes while every linear predictor
    // saturates; genuine fits keep some observation near the boundary
    double min_abs_eta = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      min_abs_eta = std::min(min_abs_eta, std::abs(X.row(i).dot(b)));
    if (min_abs_eta > 15.0)
      throw Error(ErrorCode::SeparationDetected,
                  "saturated linear predictors: separation suspected");
  };
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd g = grad(beta);
    if (g.norm() < 1e-8) {
      check_saturation(beta);
      return beta;
    }
    const Eigen::MatrixXd H = neg_hess(beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularDesign, "newton step failed: singular information");
    beta += ldlt.solve(g);
    if (beta.norm() > 1e3)
      throw Error(ErrorCode::SeparationDetected, "coefficients diverging: separation suspected");
  }
  Eigen::VectorXd g = grad(beta);
  if (g.norm() >= 1e-6)
    throw Error(ErrorCode::SeparationDetected, "newton iterations failed to converge");
  check_saturation(beta);
  return beta;
}

}  // namespace

ThetaVector mle_fit(const ModelSpec& spec, const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const int p = spec.n_regressors();
  const Eigen::Index n = design.rows();
  if (n <= p) throw Error(ErrorCode::Domain, "mle_fit: needs n > number of regressors");

  if (spec.family == Family::GaussianLinear) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw Error(ErrorCode::SingularDesign, "design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(y);
    const double rss = (y - design * beta).squaredNorm();
    ThetaVector theta(p + 1);
    theta.head(p) = beta;
    theta[p] = std::max(0.5 * std::log(rss / static_cast<double>(n)), kLogSigmaFloor);
    return theta;
  }

  const int m = trials(spec);
  auto grad = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-design.row(i).dot(b)));
      g += (y[i] - m * prob) * design.row(i).transpose();
    }
    return g;
  };
  auto neg_hess = [&](const Eigen::VectorXd& b) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-design.row(i).dot(b)));
      H += m * prob * (1.0 - prob) * design.row(i).transpose() * design.row(i);
    }
    return H;
  };
  return newton_glm(spec, design, grad, neg_hess, p);
}

ThetaVector mle_fit_weighted(const ModelSpec& spec, const Eigen::MatrixXd& design,
                             const Eigen::MatrixXd& weights) {
  if (spec.family == Family::GaussianLinear)
    throw Error(ErrorCode::Domain, "weighted fit is defined for discrete families");
  const int p = spec.n_regressors();
  const int m = trials(spec);
  const Eigen::Index n = design.rows();
  if (weights.rows() != n || weights.cols() != m + 1)
    throw Error(ErrorCode::DimensionMismatch, "weights must be n x (m+1)");
  // expected response per row reduces the weighted likelihood to a binomial
  // fit with fractional successes
  Eigen::VectorXd ybar = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k <= m; ++k) ybar[i] += weights(i, k) * k;
  auto grad = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-design.row(i).dot(b)));
      g += (ybar[i] - m * prob) * design.row(i).transpose();
    }
    return g;
  };
  auto neg_hess = [&](const Eigen::VectorXd& b) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-design.row(i).dot(b)));
      H += m * prob * (1.0 - prob) * design.row(i).transpose() * design.row(i);
    }
    return H;
  };
  return newton_glm(spec, design, grad, neg_hess, p);
}

}  // namespace mcd

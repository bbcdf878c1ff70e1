#include "mcd/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mcd {

namespace {

double checked_eval(const std::function<double(const Eigen::VectorXd&)>& f,
                    const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& init, const NelderMeadOptions& opts) {
  const int d = static_cast<int>(init.size());
  const double v0 = objective(init);
  if (!std::isfinite(v0))
    throw Error(ErrorCode::ObjectiveNonFinite, "objective non-finite at the initial point");

  std::vector<Eigen::VectorXd> verts(static_cast<size_t>(d) + 1, init);
  std::vector<double> vals(static_cast<size_t>(d) + 1, v0);
  for (int j = 0; j < d; ++j) {
    verts[static_cast<size_t>(j) + 1][j] += opts.init_step;
    vals[static_cast<size_t>(j) + 1] = checked_eval(objective, verts[static_cast<size_t>(j) + 1]);
  }

  auto order = [&]() {
    std::vector<size_t> idx(verts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> v2;
    std::vector<double> f2;
    for (size_t i : idx) {
      v2.push_back(verts[i]);
      f2.push_back(vals[i]);
    }
    verts.swap(v2);
    vals.swap(f2);
  };

  NelderMeadResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    order();
    double diam = 0.0;
    for (size_t i = 1; i < verts.size(); ++i)
      diam = std::max(diam, (verts[i] - verts[0]).norm());
    if (diam < opts.tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (size_t i = 0; i + 1 < verts.size(); ++i) centroid += verts[i];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd& worst = verts.back();
    const Eigen::VectorXd xr = centroid + 1.0 * (centroid - worst);
    const double fr = checked_eval(objective, xr);
    if (fr < vals[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
      const double fe = checked_eval(objective, xe);
      if (fe < fr) {
        verts.back() = xe;
        vals.back() = fe;
      } else {
        verts.back() = xr;
        vals.back() = fr;
      }
    } else if (fr < vals[vals.size() - 2]) {
      verts.back() = xr;
      vals.back() = fr;
    } else {
      const bool outside = fr < vals.back();
      const Eigen::VectorXd xc =
          outside ? centroid + 0.5 * (xr - centroid) : centroid + 0.5 * (worst - centroid);
      const double fc = checked_eval(objective, xc);
      if (fc < std::min(fr, vals.back())) {
        verts.back() = xc;
        vals.back() = fc;
      } else {
        for (size_t i = 1; i < verts.size(); ++i) {
          verts[i] = verts[0] + 0.5 * (verts[i] - verts[0]);
          vals[i] = checked_eval(objective, verts[i]);
        }
      }
    }
  }
  order();
  res.x = verts[0];
  res.value = vals[0];
  res.iterations = it;
  return res;
}

std::string tag_label(EstimatorTag tag, Family family) {
  switch (tag) {
    case EstimatorTag::MLE: return family == Family::GaussianLinear ? "Lik" : "LR";
    case EstimatorTag::Huber: return "Hub";
    case EstimatorTag::HD: return "HD";
    case EstimatorTag::NED: return "NED";
    case EstimatorTag::HDc: return "HD.c";
    case EstimatorTag::NEDc: return "NED.c";
    case EstimatorTag::HDh: return "HD.h";
    case EstimatorTag::NEDh: return "NED.h";
    case EstimatorTag::HDm: return "HD.m";
    case EstimatorTag::NEDm: return "NED.m";
  }
  return "?";
}

EstimatorTag parse_tag(const std::string& name) {
  if (name == "Lik" || name == "LR" || name == "MLE") return EstimatorTag::MLE;
  if (name == "Hub" || name == "Huber") return EstimatorTag::Huber;
  if (name == "HD") return EstimatorTag::HD;
  if (name == "NED") return EstimatorTag::NED;
  if (name == "HD.c") return EstimatorTag::HDc;
  if (name == "NED.c") return EstimatorTag::NEDc;
  if (name == "HD.h") return EstimatorTag::HDh;
  if (name == "NED.h") return EstimatorTag::NEDh;
  if (name == "HD.m") return EstimatorTag::HDm;
  if (name == "NED.m") return EstimatorTag::NEDm;
  throw Error(ErrorCode::Config, "unknown estimator tag: " + name);
}

bool tag_is_disparity(EstimatorTag tag) {
  return tag != EstimatorTag::MLE && tag != EstimatorTag::Huber;
}

bool tag_is_marginal(EstimatorTag tag) {
  return tag == EstimatorTag::HDm || tag == EstimatorTag::NEDm;
}

CKind tag_ckind(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::HD:
    case EstimatorTag::HDc:
    case EstimatorTag::HDh:
    case EstimatorTag::HDm: return CKind::HD;
    default: return CKind::NED;
  }
}

CovariatePartition partition_for_tag(EstimatorTag tag, const Dataset& ds) {
  CovariatePartition part;
  std::vector<int> all;
  for (int k = 0; k < ds.n_x_indices(); ++k) all.push_back(k);
  switch (tag) {
    case EstimatorTag::HD:
    case EstimatorTag::NED: part.g_only = all; break;
    case EstimatorTag::HDc:
    case EstimatorTag::NEDc: part.shared = all; break;
    case EstimatorTag::HDh:
    case EstimatorTag::NEDh: part.m_only = all; break;
    default: break;  // MLE/Huber/marginal need no partition
  }
  return part;
}

FitResult fit_mde(const DensityEstimate& density, const Dataset& ds,
                  const CovariatePartition& part, const ModelSpec& model,
                  const DisparitySpec& dspec, const ThetaVector& init,
                  const NelderMeadOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  DisparityObjective obj(dspec, density, model, ds, part);
  NelderMeadResult nm = nelder_mead([&obj](const Eigen::VectorXd& t) { return obj(t); }, init, opts);
  if (nm.x.norm() > 1e6)
    throw Error(ErrorCode::OptimizerDiverged, "parameter norm exceeded 1e6 during optimization");
  FitResult out;
  out.theta = nm.x;
  out.objective = nm.value;
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  out.tag = dspec.kind == CKind::HD ? "HD" : "NED";
  out.seconds = elapsed(t0);
  return out;
}

FitResult fit_mde(const Dataset& ds, const CovariatePartition& part, const ModelSpec& model,
                  const DisparitySpec& dspec, const BandwidthSet& bw, const ThetaVector& init,
                  const NelderMeadOptions& opts) {
  const DensityEstimate density = DensityEstimate::fit(ds, part, bw);
  return fit_mde(density, ds, part, model, dspec, init, opts);
}

FitResult fit_mde_exact(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& design,
                        const ModelSpec& model, const DisparitySpec& dspec,
                        const ThetaVector& init, const NelderMeadOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  DisparityObjective obj(dspec, model, probs, design);
  NelderMeadResult nm = nelder_mead([&obj](const Eigen::VectorXd& t) { return obj(t); }, init, opts);
  if (nm.x.norm() > 1e6)
    throw Error(ErrorCode::OptimizerDiverged, "parameter norm exceeded 1e6 during optimization");
  FitResult out;
  out.theta = nm.x;
  out.objective = nm.value;
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  out.tag = dspec.kind == CKind::HD ? "HD" : "NED";
  out.seconds = elapsed(t0);
  return out;
}

double mad_scale(const Eigen::VectorXd& v) {
  std::vector<double> a(v.data(), v.data() + v.size());
  auto median = [](std::vector<double> w) {
    const size_t m = w.size() / 2;
    std::nth_element(w.begin(), w.begin() + static_cast<long>(m), w.end());
    double hi = w[m];
    if (w.size() % 2 == 0) {
      std::nth_element(w.begin(), w.begin() + static_cast<long>(m) - 1, w.end());
      return 0.5 * (hi + w[m - 1]);
    }
    return hi;
  };
  const double med = median(a);
  for (double& x : a) x = std::abs(x - med);
  return median(a) / 0.6745;
}

namespace {

// trapezoid integral of C(f_n(e;theta)/phi_sigma(e) - 1) phi_sigma(e) de
double marginal_disparity(CKind kind, const Eigen::VectorXd& resid, double h, double log_sigma) {
  const double sig = std::exp(log_sigma);
  const double lo = std::min(resid.minCoeff() - 6.0 * h, -6.0 * sig);
  const double hi = std::max(resid.maxCoeff() + 6.0 * h, 6.0 * sig);
  constexpr int G = 481;
  const double step = (hi - lo) / (G - 1);
  const double lognorm = -0.5 * std::log(2.0 * M_PI) - log_sigma;
  MarginalResidualDensity fdens(h);
  double acc = 0.0;
  for (int g = 0; g < G; ++g) {
    const double e = lo + step * g;
    const double phi = std::exp(lognorm - 0.5 * (e / sig) * (e / sig));
    const double f = fdens.eval(resid, e);
    const double delta = std::max(f / std::max(phi, kDensityFloor) - 1.0, -1.0 + 1e-12);
    double v = c_function(kind, delta) * phi;
    if (g == 0 || g == G - 1) v *= 0.5;
    acc += v;
  }
  return acc * step;
}

// golden-section minimization over log sigma with the residuals held fixed
double profile_log_sigma(CKind kind, const Eigen::VectorXd& resid, double h) {
  const double s0 = std::max(mad_scale(resid), 1e-6);
  double a = std::log(s0) - 2.5, b = std::log(s0) + 2.5;
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = marginal_disparity(kind, resid, h, x1);
  double f2 = marginal_disparity(kind, resid, h, x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = marginal_disparity(kind, resid, h, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = marginal_disparity(kind, resid, h, x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

FitResult fit_marginal(const Dataset& ds, const ModelSpec& model, CKind kind,
                       double residual_bandwidth, const ThetaVector& init,
                       const NelderMeadOptions& opts) {
  if (model.family != Family::GaussianLinear)
    throw Error(ErrorCode::Domain, "marginal estimator requires a continuous response model");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd X = design_matrix(model, ds);
  const Eigen::VectorXd y = response_vector(model, ds);
  const int p = model.n_regressors();
  const double h = residual_bandwidth;

  auto profiled = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd resid = y - X * beta;
    const double ls = profile_log_sigma(kind, resid, h);
    return marginal_disparity(kind, resid, h, ls);
  };
  NelderMeadResult nm = nelder_mead(profiled, init.head(p), opts);
  if (nm.x.norm() > 1e6)
    throw Error(ErrorCode::OptimizerDiverged, "parameter norm exceeded 1e6 during optimization");

  FitResult out;
  out.theta.resize(p + 1);
  out.theta.head(p) = nm.x;
  out.theta[p] = profile_log_sigma(kind, y - X * nm.x, h);
  out.objective = nm.value;
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  out.tag = kind == CKind::HD ? "HD.m" : "NED.m";
  out.seconds = elapsed(t0);
  return out;
}

FitResult fit_mle(const Dataset& ds, const ModelSpec& model) {
  const auto t0 = std::chrono::steady_clock::now();
  FitResult out;
  out.theta = mle_fit(model, ds);
  out.tag = tag_label(EstimatorTag::MLE, model.family);
  out.converged = true;
  out.seconds = elapsed(t0);
  return out;
}

FitResult fit_huber(const Dataset& ds, const ModelSpec& model, double k) {
  if (model.family != Family::GaussianLinear)
    throw Error(ErrorCode::Domain, "huber fit requires a continuous response");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd X = design_matrix(model, ds);
  const Eigen::VectorXd y = response_vector(model, ds);
  const int p = model.n_regressors();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw Error(ErrorCode::SingularDesign, "design matrix is rank deficient");
  Eigen::VectorXd beta = qr.solve(y);
  double s = 0.0;
  int it = 0;
  for (; it < 200; ++it) {
    const Eigen::VectorXd r = y - X * beta;
    s = mad_scale(r);
    if (s < 1e-12) break;  // exact interpolation
    Eigen::MatrixXd XtWX = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd XtWy = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double u = std::abs(r[i]) / s;
      const double w = u <= k ? 1.0 : k / u;
      XtWX += w * X.row(i).transpose() * X.row(i);
      XtWy += w * y[i] * X.row(i).transpose();
    }
    const Eigen::VectorXd next = XtWX.ldlt().solve(XtWy);
    const double change = (next - beta).norm();
    beta = next;
    if (change < 1e-8 * (1.0 + beta.norm())) break;
  }
  FitResult out;
  out.theta.resize(p + 1);
  out.theta.head(p) = beta;
  out.theta[p] = std::log(std::max(s, 1e-8));
  out.iterations = it;
  out.converged = it < 200;
  out.tag = "Hub";
  out.seconds = elapsed(t0);
  return out;
}

}  // namespace mcd

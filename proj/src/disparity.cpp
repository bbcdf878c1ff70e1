#include "mcd/disparity.hpp"

#include <cmath>

namespace mcd {

namespace {

constexpr double kDeltaFloor = -1.0 + 1e-12;

uint64_t hash_point(const XPoint& x) {
  uint64_t h = 1469598103934665603ULL;
  auto mix_bytes = [&h](const void* p, size_t nbytes) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < nbytes; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index j = 0; j < x.xc.size(); ++j) mix_bytes(&x.xc[j], sizeof(double));
  mix_bytes(&x.xd, sizeof(int));
  return h;
}

// eta -> m * log(1 + e^eta), stable
double m_log1pexp(int m, double eta) {
  const double lse = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return m * lse;
}

}  // namespace

double c_function(CKind kind, double delta) {
  if (delta < -1.0) throw Error(ErrorCode::Domain, "c_function: delta below -1");
  if (kind == CKind::NED) return std::exp(-delta) - 1.0;
  const double s = std::sqrt(delta + 1.0) - 1.0;
  return s * s - 1.0;
}

Raf residual_adjustment(CKind kind, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::Domain, "residual_adjustment: r must be positive");
  if (kind == CKind::NED) {
    const double e = std::exp(-(r - 1.0));  // C''(r-1) = e^{-(r-1)}
    return Raf{-e * r, (e - 1.0) + e * r, e * r * r};
  }
  // HD: C'(x) = 1 - (x+1)^{-1/2}, C''(x) = (x+1)^{-3/2}/2, evaluated at x = r-1
  const double sq = std::sqrt(r);
  return Raf{-0.5 / sq, -sq, 0.5 * sq};
}

DisparityObjective::DisparityObjective(const DisparitySpec& spec, const ModelSpec& model,
                                       const Eigen::MatrixXd& probs, const Eigen::MatrixXd& design)
    : spec_(spec), model_(model), discrete_(true), design_(design), probs_(probs) {
  if (model.support_size() == 0)
    throw Error(ErrorCode::Domain, "exact distributions require a discrete family");
  if (probs_.cols() != model.support_size() || probs_.rows() != design_.rows())
    throw Error(ErrorCode::DimensionMismatch, "probability matrix shape mismatch");
}

DisparityObjective::DisparityObjective(const DisparitySpec& spec, const DensityEstimate& density,
                                       const ModelSpec& model, const Dataset& ds,
                                       const CovariatePartition& part)
    : spec_(spec), model_(model) {
  const int n = ds.n();
  discrete_ = model.support_size() > 0;

  // assemble the covariate query for each observation; under the integrated
  // aggregation the conditioning coordinates are resampled from hhat
  std::vector<XPoint> queries(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    XPoint q;
    q.xc = ds.x_cont.row(i).transpose();
    q.xd = ds.has_x_disc() ? ds.x_disc[static_cast<size_t>(i)] : -1;
    queries[static_cast<size_t>(i)] = q;
  }
  if (spec.aggregation == Aggregation::IntegrateOverHhat) {
    RngStream hs = spec_.stream.child("hhat");
    const auto con = part.conditioning();
    const auto& bw = density.bandwidths();
    for (int i = 0; i < n; ++i) {
      const int j = hs.uniform_int(n);
      Eigen::Index cc = 0;
      for (int k : con) {
        if (ds.has_x_disc() && k == ds.x_disc_index()) {
          queries[static_cast<size_t>(i)].xd = ds.x_disc[static_cast<size_t>(j)];
        } else {
          queries[static_cast<size_t>(i)].xc[k] = ds.x_cont(j, k) + bw.c_g[cc] * hs.normal();
          ++cc;
        }
      }
    }
  }

  design_.resize(n, model.n_regressors());
  for (int i = 0; i < n; ++i) {
    const XPoint& q = queries[static_cast<size_t>(i)];
    const double dv = (q.xd >= 0 && ds.has_x_disc()) ? ds.x_disc_values[static_cast<size_t>(q.xd)] : 0.0;
    design_.row(i) = model.regressors_at(q.xc, dv).transpose();
  }

  if (discrete_) {
    const int support = model.support_size();
    probs_.resize(n, support);
    for (int i = 0; i < n; ++i)
      for (int y = 0; y < support; ++y)
        probs_(i, y) = density.eval_disc(y, queries[static_cast<size_t>(i)]);
    return;
  }

  if (density.dy_cont() != 1 || density.has_y_disc())
    throw Error(ErrorCode::Domain,
                "Monte Carlo disparity route expects a univariate continuous response");
  const int M = spec_.mc_points;
  if (M < 1) throw Error(ErrorCode::Domain, "mc_points must be >= 1");
  draws_.resize(n, M);
  fvals_.resize(n, M);
  for (int i = 0; i < n; ++i) {
    const XPoint& q = queries[static_cast<size_t>(i)];
    RngStream st = spec_.stream.child(hash_point(q));
    const YSample ys = density.sample(q, M, st);
    for (int k = 0; k < M; ++k) {
      const double y = ys.y_cont(k, 0);
      const double f = density.eval1(y, q);
      if (f < kDensityFloor)
        throw Error(ErrorCode::DegenerateDensity, "density underflow at a Monte Carlo draw");
      draws_(i, k) = y;
      fvals_(i, k) = f;
    }
  }
}

double DisparityObjective::operator()(const ThetaVector& theta) const {
  const int p = model_.n_regressors();
  const Eigen::Index n = design_.rows();
  const CKind kind = spec_.kind;
  double total = 0.0;

  if (discrete_) {
    const int m = model_.support_size() - 1;
    const bool binom = model_.family == Family::Binomial;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eta = design_.row(i).dot(theta.head(p));
      const double logz = m_log1pexp(m, eta);
      double di = 0.0;
      for (int y = 0; y <= m; ++y) {
        double lphi = y * eta - logz;
        if (binom) lphi += std::lgamma(m + 1.0) - std::lgamma(y + 1.0) - std::lgamma(m - y + 1.0);
        const double phi = std::exp(lphi);
        const double delta =
            std::max(probs_(i, y) / std::max(phi, kDensityFloor) - 1.0, kDeltaFloor);
        di += c_function(kind, delta) * phi;
      }
      total += di;
    }
    return total / static_cast<double>(n);
  }

  // Continuous response: importance-weighted Monte Carlo anchored at C(-1),
  //   D ~= C(-1) + (1/M) sum_k [C(delta_k) - C(-1)] phi(y_k)/f(y_k),
  // exact in expectation since the C(-1) mass integrates to C(-1) against phi.
  // The anchored form keeps the estimate honest when phi drifts away from the
  // data: the naive weighted sum decays to zero there instead of approaching
  // the true limit C(-1), which for NED manufactures a minimum at infinity.
  const double c_anchor = c_function(kind, -1.0);
  const int M = spec_.mc_points;
  const double sig = model_.family == Family::GaussianLinear ? std::exp(theta[p]) : 1.0;
  const double lognorm = -0.5 * std::log(2.0 * M_PI) - std::log(sig);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = design_.row(i).dot(theta.head(p));
    double acc = 0.0;
    for (int k = 0; k < M; ++k) {
      const double z = (draws_(i, k) - mu) / sig;
      const double phi = std::exp(lognorm - 0.5 * z * z);
      const double f = fvals_(i, k);
      const double delta = std::max(f / std::max(phi, kDensityFloor) - 1.0, kDeltaFloor);
      acc += (c_function(kind, delta) - c_anchor) * phi / f;
    }
    total += c_anchor + acc / static_cast<double>(M);
  }
  return total / static_cast<double>(n);
}

double pointwise_disparity(const DisparitySpec& spec, const DensityEstimate& density,
                           const ModelSpec& model, const ThetaVector& theta, const XPoint& x) {
  Dataset one;
  one.x_cont = x.xc.transpose();
  if (x.xd >= 0) {
    one.x_disc = {x.xd};
    one.x_labels.resize(static_cast<size_t>(x.xd) + 1);
    one.x_disc_values.resize(static_cast<size_t>(x.xd) + 1);
    for (int c = 0; c <= x.xd; ++c) {
      one.x_labels[static_cast<size_t>(c)] = std::to_string(c);
      one.x_disc_values[static_cast<size_t>(c)] = static_cast<double>(c);
    }
  }
  one.y_cont = Eigen::MatrixXd::Zero(1, density.dy_cont());
  if (density.has_y_disc()) {
    one.y_disc = {0};
    one.y_labels = {"0"};
  }
  CovariatePartition part;  // roles are irrelevant for a fixed query
  DisparitySpec s = spec;
  s.aggregation = Aggregation::AverageOverXi;
  DisparityObjective obj(s, density, model, one, part);
  return obj(theta);
}

double total_disparity(const DisparitySpec& spec, const DensityEstimate& density,
                       const ModelSpec& model, const ThetaVector& theta, const Dataset& ds,
                       const CovariatePartition& part) {
  DisparityObjective obj(spec, density, model, ds, part);
  return obj(theta);
}

}  // namespace mcd

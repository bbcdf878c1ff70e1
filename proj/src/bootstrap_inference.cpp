#include "mcd/bootstrap_inference.hpp"

#include <cmath>

namespace mcd {

namespace {

// refit the context's estimator on a dataset with replaced responses
ThetaVector refit(const FitContext& ctx, const Dataset& ds, RngStream& rep_rng) {
  if (ctx.tag == EstimatorTag::MLE) return mle_fit(ctx.model, ds);
  if (ctx.tag == EstimatorTag::Huber) return fit_huber(ds, ctx.model, ctx.huber_k).theta;

  const ThetaVector init = mle_fit(ctx.model, ds);
  if (tag_is_marginal(ctx.tag))
    return fit_marginal(ds, ctx.model, tag_ckind(ctx.tag), ctx.marginal_bandwidth, init, ctx.nm)
        .theta;

  DisparitySpec dspec = ctx.dspec;
  dspec.stream = rep_rng.child("mc");
  return fit_mde(ds, ctx.part, ctx.model, dspec, ctx.bw, init, ctx.nm).theta;
}

Dataset with_responses(const Dataset& base, const Eigen::VectorXd& y_cont_col,
                       const std::vector<int>& y_disc) {
  Dataset ds = base;
  if (ds.dy() > 0) ds.y_cont.col(0) = y_cont_col;
  if (!y_disc.empty()) ds.y_disc = y_disc;
  return ds;
}

}  // namespace

BootstrapResult assemble_bootstrap(const Eigen::VectorXd& theta_hat,
                                   const Eigen::MatrixXd& replicates, int requested_B,
                                   int failures) {
  if (replicates.rows() < 1)
    throw Error(ErrorCode::TooManyFailures, "no bootstrap replicate converged");
  BootstrapResult out;
  out.theta_hat = theta_hat;
  out.replicates = replicates;
  out.B = requested_B;
  out.failures = failures;
  const Eigen::Index p = theta_hat.size();
  const double m = static_cast<double>(replicates.rows());
  Eigen::VectorXd mean = replicates.colwise().mean();
  out.theta_corrected = 2.0 * theta_hat - mean;
  out.se.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ss = (replicates.col(j).array() - mean[j]).square().sum();
    out.se[j] = m > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  }
  out.ci_lo = out.theta_corrected - 1.96 * out.se;
  out.ci_hi = out.theta_corrected + 1.96 * out.se;
  return out;
}

BootstrapResult bootstrap_mde(const FitContext& ctx, int B, RngStream rng) {
  if (B < 2) throw Error(ErrorCode::Domain, "bootstrap needs B >= 2");
  const Dataset& ds = *ctx.ds;
  const int n = ds.n();
  const int p = static_cast<int>(ctx.theta_hat.size());
  Eigen::MatrixXd reps(B, p);
  int ok = 0, failures = 0;

  // marginal estimators resample parametric means plus draws from the
  // residual kernel density at theta_hat
  Eigen::VectorXd marg_mu, marg_resid;
  if (tag_is_marginal(ctx.tag)) {
    const Eigen::MatrixXd X = design_matrix(ctx.model, ds);
    marg_mu = X * ctx.theta_hat.head(ctx.model.n_regressors());
    marg_resid = response_vector(ctx.model, ds) - marg_mu;
  }

  for (int b = 0; b < B; ++b) {
    RngStream rb = rng.child(static_cast<uint64_t>(b) + 1);
    try {
      Eigen::VectorXd ystar = Eigen::VectorXd::Zero(n);
      std::vector<int> ydisc_star;
      if (tag_is_marginal(ctx.tag)) {
        for (int i = 0; i < n; ++i) {
          const int j = rb.uniform_int(n);
          ystar[i] = marg_mu[i] + marg_resid[j] + ctx.marginal_bandwidth * rb.normal();
        }
      } else {
        const DensityEstimate& dens = *ctx.density;
        if (dens.has_y_disc()) ydisc_star.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
          XPoint q;
          q.xc = ds.x_cont.row(i).transpose();
          q.xd = ds.has_x_disc() ? ds.x_disc[static_cast<size_t>(i)] : -1;
          const YSample s = dens.sample(q, 1, rb);
          if (ds.dy() > 0) ystar[i] = s.y_cont(0, 0);
          if (dens.has_y_disc()) ydisc_star[static_cast<size_t>(i)] = s.y_disc[0];
        }
      }
      const Dataset dstar = with_responses(ds, ystar, ydisc_star);
      reps.row(ok++) = refit(ctx, dstar, rb).transpose();
    } catch (const Error&) {
      ++failures;
    }
  }
  if (failures > B / 2)
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(failures) + " of " + std::to_string(B) + " replicates failed");
  return assemble_bootstrap(ctx.theta_hat, reps.topRows(ok), B, failures);
}

BootstrapResult bootstrap_baseline(const FitContext& ctx, int B, RngStream rng) {
  if (B < 2) throw Error(ErrorCode::Domain, "bootstrap needs B >= 2");
  const Dataset& ds = *ctx.ds;
  const int n = ds.n();
  const int p = static_cast<int>(ctx.theta_hat.size());
  const Eigen::MatrixXd X = design_matrix(ctx.model, ds);
  Eigen::MatrixXd reps(B, p);
  int ok = 0, failures = 0;

  if (ctx.model.family == Family::GaussianLinear) {
    const Eigen::VectorXd mu = X * ctx.theta_hat.head(ctx.model.n_regressors());
    Eigen::VectorXd resid = response_vector(ctx.model, ds) - mu;
    resid.array() -= resid.mean();  // recentered fitted residuals
    for (int b = 0; b < B; ++b) {
      RngStream rb = rng.child(static_cast<uint64_t>(b) + 1);
      try {
        Eigen::VectorXd ystar(n);
        for (int i = 0; i < n; ++i) ystar[i] = mu[i] + resid[rb.uniform_int(n)];
        reps.row(ok++) = refit(ctx, with_responses(ds, ystar, {}), rb).transpose();
      } catch (const Error&) {
        ++failures;
      }
    }
  } else {
    for (int b = 0; b < B; ++b) {
      RngStream rb = rng.child(static_cast<uint64_t>(b) + 1);
      try {
        std::vector<int> ydisc(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
          ydisc[static_cast<size_t>(i)] = static_cast<int>(
              sample(ctx.model, ctx.theta_hat, X.row(i).transpose(), rb));
        reps.row(ok++) = refit(ctx, with_responses(ds, Eigen::VectorXd(), ydisc), rb).transpose();
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  if (failures > B / 2)
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(failures) + " of " + std::to_string(B) + " replicates failed");
  return assemble_bootstrap(ctx.theta_hat, reps.topRows(ok), B, failures);
}

BootstrapResult run_bootstrap(const FitContext& ctx, int B, RngStream rng) {
  if (tag_is_disparity(ctx.tag)) return bootstrap_mde(ctx, B, rng);
  return bootstrap_baseline(ctx, B, rng);
}

}  // namespace mcd

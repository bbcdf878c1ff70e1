#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcd/bootstrap_inference.hpp"
#include "mcd/sim_harness.hpp"

using namespace mcd;

namespace {

Eigen::VectorXd dvec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

Dataset linear_data(int n, uint64_t seed, double noise = 1.0) {
  RngStream rng(seed);
  const Eigen::MatrixXd X = generate_covariates(n, rng);
  Dataset ds = make_sim_dataset(X, Family::GaussianLinear);
  for (int i = 0; i < n; ++i)
    ds.y_cont(i, 0) = 1 + X(i, 0) + X(i, 1) + X(i, 2) + noise * rng.normal();
  return ds;
}

ModelSpec linear_model() {
  ModelSpec spec;
  spec.family = Family::GaussianLinear;
  spec.design_cols = {0, 1, 2};
  return spec;
}

}  // namespace

TEST_CASE("bias-correction and interval arithmetic from a replicate matrix") {
  // theta_hat 1.2, replicate mean 1.3 -> corrected 1.1
  Eigen::MatrixXd reps(4, 1);
  reps << 1.25, 1.35, 1.28, 1.32;
  const BootstrapResult br = assemble_bootstrap(dvec({1.2}), reps, 4, 0);
  CHECK(br.theta_corrected[0] == doctest::Approx(2 * 1.2 - 1.3).epsilon(1e-12));
  const double mean = 1.3;
  double ss = 0;
  for (int b = 0; b < 4; ++b) ss += std::pow(reps(b, 0) - mean, 2);
  const double se = std::sqrt(ss / 3.0);
  CHECK(br.se[0] == doctest::Approx(se).epsilon(1e-12));
  CHECK(br.ci_lo[0] == doctest::Approx(br.theta_corrected[0] - 1.96 * se).epsilon(1e-12));
  CHECK(br.ci_hi[0] == doctest::Approx(br.theta_corrected[0] + 1.96 * se).epsilon(1e-12));
}

TEST_CASE("degenerate bootstrap collapses to a point") {
  // noiseless linear data with a nearly-zero response bandwidth: every
  // conditional draw equals the fitted center, so all replicates coincide
  RngStream rng(51);
  const Eigen::MatrixXd X = generate_covariates(25, rng);
  Dataset ds = make_sim_dataset(X, Family::GaussianLinear);
  for (int i = 0; i < 25; ++i) ds.y_cont(i, 0) = 1 + X(i, 0) + X(i, 1) + X(i, 2);
  const ModelSpec spec = linear_model();

  FitContext ctx;
  ctx.ds = &ds;
  ctx.model = spec;
  ctx.tag = EstimatorTag::MLE;
  ctx.theta_hat = mle_fit(spec, ds);
  // residual bootstrap on exact-fit data: zero residuals, identical replicates
  const BootstrapResult br = bootstrap_baseline(ctx, 20, RngStream(52));
  CHECK(br.failures == 0);
  for (int j = 0; j < 4; ++j) {
    CHECK(br.se[j] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(br.theta_corrected[j] == doctest::Approx(ctx.theta_hat[j]).epsilon(1e-10));
    CHECK(br.ci_lo[j] == doctest::Approx(br.ci_hi[j]).epsilon(1e-10));
  }
}

TEST_CASE("mde bootstrap on a near-degenerate conditional density") {
  RngStream rng(53);
  const Eigen::MatrixXd X = generate_covariates(20, rng);
  Dataset ds = make_sim_dataset(X, Family::GaussianLinear);
  for (int i = 0; i < 20; ++i) ds.y_cont(i, 0) = 1 + X(i, 0) + X(i, 1) + X(i, 2);
  const ModelSpec spec = linear_model();
  CovariatePartition part;
  part.shared = {0, 1, 2};
  BandwidthSet bw;
  bw.c_m = Eigen::VectorXd::Constant(2, 1e-3);
  bw.c_g = Eigen::VectorXd::Constant(2, 0.5);
  bw.c_y = Eigen::VectorXd::Constant(1, 1e-12);
  const DensityEstimate density = DensityEstimate::fit(ds, part, bw);

  FitContext ctx;
  ctx.ds = &ds;
  ctx.part = part;
  ctx.model = spec;
  ctx.tag = EstimatorTag::NEDc;
  ctx.dspec = DisparitySpec{CKind::NED, 31, Aggregation::AverageOverXi, RngStream(1)};
  ctx.bw = bw;
  ctx.density = &density;
  ctx.theta_hat = mle_fit(spec, ds);
  const BootstrapResult br = bootstrap_mde(ctx, 6, RngStream(54));
  // with a tiny c_m the centers interpolate the responses, so resampled
  // responses equal the originals up to 1e-9 noise and the spread collapses
  CHECK(br.se.maxCoeff() < 1e-3);
}

TEST_CASE("replicates are reproducible in isolation: prefixes agree across B") {
  Dataset ds = linear_data(25, 55);
  const ModelSpec spec = linear_model();
  FitContext ctx;
  ctx.ds = &ds;
  ctx.model = spec;
  ctx.tag = EstimatorTag::MLE;
  ctx.theta_hat = mle_fit(spec, ds);
  const BootstrapResult b10 = bootstrap_baseline(ctx, 10, RngStream(56));
  const BootstrapResult b5 = bootstrap_baseline(ctx, 5, RngStream(56));
  CHECK(b10.failures == 0);
  CHECK(b5.failures == 0);
  for (int b = 0; b < 5; ++b)
    for (int j = 0; j < 5; ++j) CHECK(b10.replicates(b, j) == b5.replicates(b, j));
}

TEST_CASE("parametric bootstrap means stabilize as B grows") {
  RngStream rng(57);
  const Eigen::MatrixXd X = generate_covariates(121, rng);
  Dataset ds = make_sim_dataset(X, Family::Logistic);
  ModelSpec spec;
  spec.family = Family::Logistic;
  spec.design_cols = {0, 1, 2};
  const Eigen::MatrixXd D = design_matrix(spec, ds);
  RngStream resp(58);
  for (int i = 0; i < 121; ++i)
    ds.y_disc[static_cast<size_t>(i)] =
        static_cast<int>(sample(spec, dvec({0, 0.5, 0.5, 0.5}), D.row(i).transpose(), resp));

  FitContext ctx;
  ctx.ds = &ds;
  ctx.model = spec;
  ctx.tag = EstimatorTag::MLE;
  ctx.theta_hat = mle_fit(spec, ds);
  const BootstrapResult big = bootstrap_baseline(ctx, 2000, RngStream(59));
  const BootstrapResult small = bootstrap_baseline(ctx, 200, RngStream(60));
  for (int j = 0; j < 4; ++j) {
    const double se = big.se[j];
    CHECK(std::abs(big.replicates.col(j).mean() - small.replicates.col(j).mean()) <
          3.0 * se / std::sqrt(200.0));
  }
}

TEST_CASE("se from half the replicates stays within the sanity band") {
  Dataset ds = linear_data(31, 61);
  const ModelSpec spec = linear_model();
  FitContext ctx;
  ctx.ds = &ds;
  ctx.model = spec;
  ctx.tag = EstimatorTag::MLE;
  ctx.theta_hat = mle_fit(spec, ds);
  const BootstrapResult br = bootstrap_baseline(ctx, 100, RngStream(62));
  const Eigen::MatrixXd half = br.replicates.topRows(50);
  for (int j = 0; j < 5; ++j) {
    const double mh = half.col(j).mean();
    const double seh = std::sqrt((half.col(j).array() - mh).square().sum() / 49.0);
    CHECK(seh > 0.5 * br.se[j]);
    CHECK(seh < 1.5 * br.se[j]);
  }
}

TEST_CASE("mde bootstrap on the logistic model runs end to end") {
  RngStream rng(63);
  const Eigen::MatrixXd X = generate_covariates(121, rng);
  Dataset ds = make_sim_dataset(X, Family::Logistic);
  ModelSpec spec;
  spec.family = Family::Logistic;
  spec.design_cols = {0, 1, 2};
  const Eigen::MatrixXd D = design_matrix(spec, ds);
  RngStream resp(64);
  for (int i = 0; i < 121; ++i)
    ds.y_disc[static_cast<size_t>(i)] =
        static_cast<int>(sample(spec, dvec({0, 0.5, 0.5, 0.5}), D.row(i).transpose(), resp));

  CovariatePartition part;
  part.g_only = {0, 1, 2};
  BandwidthGrid grid;
  const SelectedBandwidths bw = select_bandwidths(ds, part, grid, CmRule::DensityLogLik);
  const DensityEstimate density = DensityEstimate::fit(ds, part, bw.set);
  DisparitySpec dsp{CKind::NED, 101, Aggregation::AverageOverXi, RngStream(65)};
  const FitResult fr = fit_mde(density, ds, part, spec, dsp, mle_fit(spec, ds), {});

  FitContext ctx;
  ctx.ds = &ds;
  ctx.part = part;
  ctx.model = spec;
  ctx.tag = EstimatorTag::NED;
  ctx.dspec = dsp;
  ctx.bw = bw.set;
  ctx.density = &density;
  ctx.theta_hat = fr.theta;
  const BootstrapResult br = bootstrap_mde(ctx, 30, RngStream(66));
  CHECK(br.failures <= 2);
  CHECK(br.se.minCoeff() > 0.0);
  CHECK((br.theta_corrected - 2.0 * fr.theta + br.replicates.colwise().mean().transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("too many failures raises") {
  Eigen::MatrixXd reps(0, 2);
  CHECK_THROWS_AS(assemble_bootstrap(dvec({0, 0}), reps, 10, 10), Error);
}

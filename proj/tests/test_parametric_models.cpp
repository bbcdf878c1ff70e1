#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcd/parametric_models.hpp"
#include "mcd/sim_harness.hpp"

using namespace mcd;

namespace {

ModelSpec gaussian1() {
  ModelSpec spec;
  spec.family = Family::GaussianLinear;
  spec.design_cols = {0};
  return spec;
}

Eigen::VectorXd dvec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

}  // namespace

TEST_CASE("log density closed forms") {
  ModelSpec g = gaussian1();
  // beta = 0, log sigma = 0, y = 0: -log(sqrt(2 pi))
  CHECK(log_density(g, dvec({0, 0, 0}), 0.0, dvec({1, 0.3})) ==
        doctest::Approx(-0.9189385332).epsilon(1e-9));

  ModelSpec lg;
  lg.family = Family::Logistic;
  lg.design_cols = {0, 1};
  CHECK(log_density(lg, dvec({0, 0, 0}), 1.0, dvec({1, 2, -1})) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));

  ModelSpec bn;
  bn.family = Family::Binomial;
  bn.m_trials = 8;
  bn.design_cols = {0};
  // log(C(8,4) * 0.5^8) = log 70 - 8 log 2
  CHECK(log_density(bn, dvec({0, 0}), 4.0, dvec({1, 5})) ==
        doctest::Approx(std::log(70.0) - 8.0 * std::log(2.0)).epsilon(1e-9));
  CHECK(log_density(bn, dvec({0, 0}), 4.0, dvec({1, 5})) ==
        doctest::Approx(-1.2966822).epsilon(1e-6));
}

TEST_CASE("support violations are rejected") {
  ModelSpec bn;
  bn.family = Family::Binomial;
  bn.m_trials = 8;
  bn.design_cols = {0};
  try {
    log_density(bn, dvec({0, 0}), 9.0, dvec({1, 0}));
    FAIL("expected support violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportViolation);
  }
  CHECK_THROWS_AS(score(bn, dvec({0, 0}), 3.5, dvec({1, 0})), Error);
}

TEST_CASE("density normalizes over its support") {
  ModelSpec bn;
  bn.family = Family::Binomial;
  bn.m_trials = 8;
  bn.design_cols = {0};
  const Eigen::VectorXd th = dvec({0.3, -0.8});
  const Eigen::VectorXd x = dvec({1, 0.4});
  double total = 0.0;
  for (int y = 0; y <= 8; ++y) total += std::exp(log_density(bn, th, y, x));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Gaussian: quadrature over a wide window
  ModelSpec g = gaussian1();
  const Eigen::VectorXd tg = dvec({0.5, -0.2, std::log(1.3)});
  double acc = 0.0;
  const int pts = 20001;
  const double lo = -12, hi = 13;
  for (int i = 0; i < pts; ++i) {
    const double y = lo + (hi - lo) * i / (pts - 1);
    double v = std::exp(log_density(g, tg, y, dvec({1, 1.0})));
    if (i == 0 || i == pts - 1) v *= 0.5;
    acc += v;
  }
  CHECK(acc * (hi - lo) / (pts - 1) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("sampling edge cases") {
  RngStream rng(21);
  ModelSpec g = gaussian1();
  const Eigen::VectorXd th = dvec({2.0, 1.0, std::log(1e-12)});
  for (int i = 0; i < 20; ++i) {
    const double y = sample(g, th, dvec({1, 0.7}), rng);
    CHECK(std::abs(y - 2.7) < 1e-9);
  }

  ModelSpec lg;
  lg.family = Family::Logistic;
  lg.design_cols = {0};
  const Eigen::VectorXd saturated = dvec({30.0, 0.0});
  for (int i = 0; i < 10000; ++i)
    CHECK(sample(lg, saturated, dvec({1, 0}), rng) == doctest::Approx(1.0));
}

TEST_CASE("binomial sample mean is within four standard errors") {
  RngStream rng(22);
  ModelSpec bn;
  bn.family = Family::Binomial;
  bn.m_trials = 8;
  bn.design_cols = {0};
  const Eigen::VectorXd th = dvec({0, 0});
  const int n = 100000;
  double total = 0;
  for (int i = 0; i < n; ++i) total += sample(bn, th, dvec({1, 0}), rng);
  const double se = std::sqrt(8 * 0.25 / n);
  CHECK(std::abs(total / n - 4.0) < 4 * se);
}

TEST_CASE("score matches central finite differences") {
  RngStream rng(23);
  std::vector<ModelSpec> specs;
  specs.push_back(gaussian1());
  ModelSpec lg;
  lg.family = Family::Logistic;
  lg.design_cols = {0, 1};
  specs.push_back(lg);
  ModelSpec bn;
  bn.family = Family::Binomial;
  bn.m_trials = 8;
  bn.design_cols = {0};
  specs.push_back(bn);

  for (const ModelSpec& spec : specs) {
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd theta(spec.theta_dim());
      for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd x(spec.n_regressors());
      x[0] = 1.0;
      for (Eigen::Index j = 1; j < x.size(); ++j) x[j] = rng.uniform(-2.0, 2.0);
      double y;
      if (spec.family == Family::GaussianLinear)
        y = rng.uniform(-3.0, 3.0);
      else
        y = rng.uniform_int(spec.family == Family::Logistic ? 2 : 9);
      const Eigen::VectorXd g = score(spec, theta, y, x);
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        const double fd = (log_density(spec, tp, y, x) - log_density(spec, tm, y, x)) / (2 * h);
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("gaussian score vanishes on the beta block at a perfect fit") {
  ModelSpec g = gaussian1();
  const Eigen::VectorXd th = dvec({1.0, 2.0, 0.3});
  const Eigen::VectorXd x = dvec({1, 0.7});
  const double y = 1.0 + 2.0 * 0.7;
  const Eigen::VectorXd s = score(g, th, y, x);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(0.0));
}

TEST_CASE("logistic score at zero is half the design vector") {
  ModelSpec lg;
  lg.family = Family::Logistic;
  lg.design_cols = {0, 1};
  const Eigen::VectorXd x = dvec({1, -0.4, 2.2});
  const Eigen::VectorXd s = score(lg, dvec({0, 0, 0}), 1.0, x);
  for (int j = 0; j < 3; ++j) CHECK(s[j] == doctest::Approx(0.5 * x[j]).epsilon(1e-12));
}

TEST_CASE("score has mean near zero under sampling") {
  RngStream rng(24);
  ModelSpec g = gaussian1();
  const Eigen::VectorXd th = dvec({0.5, -1.0, 0.2});
  const Eigen::VectorXd x = dvec({1, 0.9});
  const int n = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3), second = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    const double y = sample(g, th, x, rng);
    const Eigen::VectorXd s = score(g, th, y, x);
    mean += s;
    second += s.cwiseProduct(s);
  }
  mean /= n;
  second /= n;
  for (int j = 0; j < 3; ++j) {
    const double se = std::sqrt((second[j] - mean[j] * mean[j]) / n);
    CHECK(std::abs(mean[j]) < 4 * se);
  }
}

TEST_CASE("fisher information closed forms") {
  // intercept-only gaussian at sigma = 1, a single design point xtilde = (1)
  ModelSpec g0;
  g0.family = Family::GaussianLinear;
  g0.design_cols = {};
  Eigen::MatrixXd Xi(1, 1);
  Xi << 1.0;
  const Eigen::MatrixXd info = fisher_information(g0, dvec({0, 0}), Xi);
  CHECK(info(0, 0) == doctest::Approx(1.0));   // beta block at sigma = 1
  CHECK(info(1, 1) == doctest::Approx(2.0));   // log sigma entry
  CHECK(info(0, 1) == doctest::Approx(0.0));

  ModelSpec lg;
  lg.family = Family::Logistic;
  lg.design_cols = {0};
  RngStream rng(25);
  Eigen::MatrixXd X(50, 2);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.uniform(-1, 1);
  }
  const Eigen::MatrixXd il = fisher_information(lg, dvec({0, 0}), X);
  const Eigen::MatrixXd expect = 0.25 * (X.transpose() * X) / 50.0;
  CHECK((il - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fisher information agrees with the finite-difference hessian") {
  RngStream rng(26);
  const Eigen::MatrixXd Xc = generate_covariates(200, rng);
  Dataset ds = make_sim_dataset(Xc, Family::Logistic);
  ModelSpec spec;
  spec.family = Family::Logistic;
  spec.design_cols = {0, 1, 2};
  const Eigen::MatrixXd X = design_matrix(spec, ds);
  const Eigen::VectorXd theta = dvec({0.1, 0.5, 0.5, 0.5});
  // E[-hessian of mean log-likelihood] via finite differences of the expected score
  auto expected_grad = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd gsum = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < 200; ++i) {
      // expectation over y in {0,1} under theta (the truth)
      const double eta0 = X.row(i).dot(theta);
      const double p = 1.0 / (1.0 + std::exp(-eta0));
      gsum += p * score(spec, th, 1.0, X.row(i).transpose());
      gsum += (1 - p) * score(spec, th, 0.0, X.row(i).transpose());
    }
    return (gsum / 200.0).eval();
  };
  const double h = 1e-5;
  Eigen::MatrixXd neg_hess(4, 4);
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    neg_hess.col(j) = -(expected_grad(tp) - expected_grad(tm)) / (2 * h);
  }
  const Eigen::MatrixXd info = fisher_information(spec, theta, X);
  CHECK((info - neg_hess).cwiseAbs().maxCoeff() / info.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("gaussian mle: exact fit and newton self-consistency") {
  RngStream rng(27);
  const int n = 40;
  Dataset ds;
  ds.x_cont.resize(n, 2);
  ds.y_cont.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    ds.x_cont(i, 0) = rng.uniform(-1, 1);
    ds.x_cont(i, 1) = rng.uniform(-1, 1);
  }
  ds.x_names = {"x1", "x2"};
  ds.y_names = {"y"};
  ModelSpec spec;
  spec.family = Family::GaussianLinear;
  spec.design_cols = {0, 1};

  // exact fit: sigma floors out
  for (int i = 0; i < n; ++i) ds.y_cont(i, 0) = 2.0 - ds.x_cont(i, 0) + 0.5 * ds.x_cont(i, 1);
  const ThetaVector exact = mle_fit(spec, ds);
  CHECK(exact[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(exact[1] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(exact[2] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(exact[3] == doctest::Approx(std::log(1e-8)));

  // noisy fit: closed form equals a newton iteration on the log likelihood
  for (int i = 0; i < n; ++i)
    ds.y_cont(i, 0) = 2.0 - ds.x_cont(i, 0) + 0.5 * ds.x_cont(i, 1) + 0.7 * rng.normal();
  const ThetaVector closed = mle_fit(spec, ds);
  const Eigen::MatrixXd X = design_matrix(spec, ds);
  const Eigen::VectorXd y = ds.y_cont.col(0);
  Eigen::VectorXd th = closed;
  th.array() += 0.05;  // start near, iterate newton on the full likelihood
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < n; ++i) grad += score(spec, th, y[i], X.row(i).transpose());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 4);
    const double h = 1e-5;
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd tp = th, tm = th;
      tp[j] += h;
      tm[j] -= h;
      Eigen::VectorXd gp = Eigen::VectorXd::Zero(4), gm = Eigen::VectorXd::Zero(4);
      for (int i = 0; i < n; ++i) {
        gp += score(spec, tp, y[i], X.row(i).transpose());
        gm += score(spec, tm, y[i], X.row(i).transpose());
      }
      H.col(j) = (gp - gm) / (2 * h);
    }
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    th -= step;
    if (step.norm() < 1e-12) break;
  }
  CHECK((th - closed).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("logistic mle detects separation") {
  Dataset ds;
  const int n = 10;
  ds.x_cont.resize(n, 1);
  ds.y_disc.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ds.x_cont(i, 0) = i < 5 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
    ds.y_disc[static_cast<size_t>(i)] = i < 5 ? 0 : 1;
  }
  ds.y_labels = {"0", "1"};
  ds.x_names = {"x"};
  ds.y_names = {"y"};
  ModelSpec spec;
  spec.family = Family::Logistic;
  spec.design_cols = {0};
  try {
    mle_fit(spec, ds);
    FAIL("expected separation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationDetected);
  }
}

TEST_CASE("mle is equivariant to covariate reordering") {
  RngStream rng(28);
  const int n = 60;
  Dataset ds;
  ds.x_cont.resize(n, 2);
  ds.y_cont.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    ds.x_cont(i, 0) = rng.uniform(-1, 1);
    ds.x_cont(i, 1) = rng.uniform(-1, 1);
    ds.y_cont(i, 0) = 1.0 + 2.0 * ds.x_cont(i, 0) - 1.0 * ds.x_cont(i, 1) + rng.normal();
  }
  ds.x_names = {"a", "b"};
  ds.y_names = {"y"};
  ModelSpec fwd;
  fwd.family = Family::GaussianLinear;
  fwd.design_cols = {0, 1};
  ModelSpec rev = fwd;
  rev.design_cols = {1, 0};
  const ThetaVector tf = mle_fit(fwd, ds);
  const ThetaVector tr = mle_fit(rev, ds);
  CHECK(tf[0] == doctest::Approx(tr[0]).epsilon(1e-10));
  CHECK(tf[1] == doctest::Approx(tr[2]).epsilon(1e-10));
  CHECK(tf[2] == doctest::Approx(tr[1]).epsilon(1e-10));
  CHECK(tf[3] == doctest::Approx(tr[3]).epsilon(1e-10));
}

TEST_CASE("weighted binomial fit recovers the generating parameters from exact tables") {
  RngStream rng(29);
  const Eigen::MatrixXd Xc = generate_covariates(150, rng);
  Dataset ds = make_sim_dataset(Xc, Family::Binomial);
  ModelSpec spec;
  spec.family = Family::Binomial;
  spec.m_trials = 8;
  spec.design_cols = {0, 1, 2};
  const Eigen::MatrixXd X = design_matrix(spec, ds);
  const Eigen::VectorXd theta = dvec({0, 0.5, 0.5, 0.5});
  ContaminationScheme none;
  const Eigen::MatrixXd probs = binomial_exact_distributions(spec, theta, X, Xc.col(0), none);
  const ThetaVector fit = mle_fit_weighted(spec, X, probs);
  CHECK((fit - theta).cwiseAbs().maxCoeff() < 1e-6);
}

// GLM fitting: IRLS against closed-form weighted least squares, deviance
// identities, score-equation stationarity, Wald tables and diagnostics.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "meandisp/errors.hpp"
#include "meandisp/glm.hpp"

using namespace meandisp;

namespace {

std::vector<std::string> cols(int p) {
  std::vector<std::string> names;
  for (int j = 0; j < p; ++j) names.push_back("c" + std::to_string(j));
  return names;
}

// Closed-form weighted least squares via the normal equations, solved with a
// full-pivot decomposition; deliberately a different code path than the
// library's QR-of-sqrt(W)X route.
Eigen::VectorXd wls_closed_form(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w) {
  const Eigen::MatrixXd XtWX =
      X.transpose() * w.asDiagonal() * X;
  const Eigen::VectorXd XtWy = X.transpose() * w.asDiagonal() * y;
  return XtWX.fullPivLu().solve(XtWy);
}

}  // namespace

TEST_CASE("normal/identity IRLS equals closed-form weighted least squares") {
  std::mt19937 gen(8673);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.2, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 12 + trial;
    const int p = 2 + trial % 4;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j < p; ++j) X(i, j) = nd(gen);
      y[i] = nd(gen) * 3.0 + 1.0;
      w[i] = ud(gen);
    }
    const GlmFit fit =
        irls_fit(Family::normal, Link::identity, X, y, w, cols(p));
    const Eigen::VectorXd ref = wls_closed_form(X, y, w);
    CHECK(fit.converged);
    CHECK((fit.beta - ref).cwiseAbs().maxCoeff() < 1e-8);
    // leverages sum to the column rank
    CHECK(fit.hat.sum() == doctest::Approx((double)p).epsilon(1e-8));
    // residual identities
    CHECK(fit.deviance ==
          doctest::Approx((w.array() * (y - fit.mu).array().square()).sum())
              .epsilon(1e-10));
  }
}

TEST_CASE("deviance components") {
  // normal: squared error
  CHECK(deviance_component(Family::normal, 3.0, 1.5) == doctest::Approx(2.25));
  CHECK(deviance_component(Family::normal, 1.0, 1.0) == 0.0);
  // gamma: 2[-log(y/mu) + (y-mu)/mu], zero at y = mu, positive elsewhere
  CHECK(deviance_component(Family::gamma, 2.0, 2.0) == doctest::Approx(0.0));
  const double d = deviance_component(Family::gamma, 3.0, 1.0);
  CHECK(d == doctest::Approx(2.0 * (-std::log(3.0) + 2.0)).epsilon(1e-12));
  CHECK(deviance_component(Family::gamma, 0.5, 2.0) > 0.0);
  // variance functions
  CHECK(variance_function(Family::normal, 5.0) == 1.0);
  CHECK(variance_function(Family::gamma, 5.0) == 25.0);
}

TEST_CASE("duplicated row equals doubled prior weight") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 0.1, 1, 0.4, 1, 1.1, 1, 2.0, 1, 2.0;
  Eigen::VectorXd y(5);
  y << 0.6, 1.1, 2.4, 4.8, 5.2;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(5);

  Eigen::MatrixXd Xw = X.topRows(4);
  Eigen::VectorXd yw(4);
  yw << 0.6, 1.1, 2.4, 5.0;  // the duplicate rows averaged, weight 2
  Eigen::VectorXd ww(4);
  ww << 1, 1, 1, 2;

  for (Family fam : {Family::normal, Family::gamma}) {
    const Link link = fam == Family::normal ? Link::identity : Link::log_link;
    const GlmFit a = irls_fit(fam, link, X, y, w, cols(2));
    const GlmFit b = irls_fit(fam, link, Xw, yw, ww, cols(2));
    // same normal equations for the identity case; for gamma/log the
    // averaged response is not equivalent, so only check the normal family
    if (fam == Family::normal)
      CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("gamma/log fits satisfy the score equations") {
  std::mt19937 gen(511);
  std::uniform_real_distribution<double> ud(0.5, 4.0);
  const int n = 40;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = ud(gen);
    X(i, 2) = i % 2 == 0 ? -1.0 : 1.0;
    y[i] = std::exp(0.3 + 0.5 * X(i, 1) - 0.2 * X(i, 2)) * ud(gen);
  }
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  IrlsOptions tight;
  tight.rel_tol = 1e-14;
  tight.abs_tol = 1e-15;
  tight.max_iter = 200;
  const GlmFit fit =
      irls_fit(Family::gamma, Link::log_link, X, y, w, cols(3), tight, 2.0);
  CHECK(fit.converged);
  // quasi-likelihood stationarity: X' (y - mu)/mu = 0 for gamma with log link
  const Eigen::VectorXd score =
      X.transpose() * ((y - fit.mu).array() / fit.mu.array()).matrix();
  CHECK(score.cwiseAbs().maxCoeff() < 1e-7);
  CHECK(fit.hat.sum() == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(fit.fixed_dispersion == 2.0);
  CHECK(fit.scale_estimate() == 2.0);
}

TEST_CASE("intercept-only gamma/log fit reproduces the sample mean") {
  Eigen::VectorXd y(6);
  y << 0.2, 1.4, 3.1, 0.9, 2.2, 5.6;
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
  const GlmFit fit = irls_fit(Family::gamma, Link::log_link, X, y,
                              Eigen::VectorXd::Ones(6), {"1"}, {}, 2.0);
  CHECK(fit.mu[0] == doctest::Approx(y.mean()).epsilon(1e-10));
  CHECK(fit.beta[0] == doctest::Approx(std::log(y.mean())).epsilon(1e-10));
}

TEST_CASE("pearson scale") {
  Eigen::MatrixXd X(4, 1);
  X << 1, 1, 1, 1;
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 3.0, 6.0;
  const GlmFit fit = irls_fit(Family::normal, Link::identity, X, y,
                              Eigen::VectorXd::Ones(4), {"1"});
  // mean 3, squared residuals 4+1+0+9 = 14, dof 3
  CHECK(fit.pearson_scale() == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
  CHECK(fit.scale_estimate() == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("wald table against hand-computed simple regression") {
  // y = 1, 2, 4 at x = 0, 1, 2: slope 1.5, intercept 2/3... compute exactly:
  // beta = (X'X)^-1 X'y with X = [1 x]
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  Eigen::VectorXd y(3);
  y << 1, 2, 4;
  const GlmFit fit = irls_fit(Family::normal, Link::identity, X, y,
                              Eigen::VectorXd::Ones(3), {"1", "x"});
  // closed form: slope = 1.5, intercept = 5/6, RSS = 1/6, scale = 1/6
  CHECK(fit.beta[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit.beta[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  const auto rows = wald_table(fit, fit.pearson_scale());
  CHECK(rows.size() == 2);
  CHECK(rows[1].term == "x");
  // var(slope) = scale / sum (x - xbar)^2 = (1/6)/2
  CHECK(rows[1].se == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-10));
  CHECK(rows[1].t == doctest::Approx(1.5 / std::sqrt(1.0 / 12.0)).epsilon(1e-10));
  CHECK(rows[1].p > 0.0);
  CHECK(rows[1].p < 1.0);
  CHECK_THROWS_AS(wald_table(fit, 0.0), numeric_error);
}

TEST_CASE("rank-deficient designs are rejected by name") {
  Eigen::MatrixXd X(5, 3);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    X(i, 2) = 2.0 * i;  // collinear with column 1
  }
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0.0, 2.0);
  try {
    irls_fit(Family::normal, Link::identity, X, y, Eigen::VectorXd::Ones(5),
             {"1", "a", "b"});
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("collinear") != std::string::npos);
    // column pivoting decides which of the two collinear columns gets named
    const bool names_one = msg.find("'a'") != std::string::npos ||
                           msg.find("'b'") != std::string::npos;
    CHECK(names_one);
  }
}

TEST_CASE("invalid inputs") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
  // negative prior weight
  Eigen::VectorXd wbad = w;
  wbad[1] = -1.0;
  CHECK_THROWS(irls_fit(Family::normal, Link::identity, X, y, wbad, {"1"}));
  // gamma family needs positive responses
  Eigen::VectorXd ybad = y;
  ybad[0] = -2.0;
  CHECK_THROWS(
      irls_fit(Family::gamma, Link::log_link, X, ybad, w, {"1"}, {}, 2.0));
}

TEST_CASE("diagnostics") {
  std::mt19937 gen(99);
  std::normal_distribution<double> nd;
  const int n = 30;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(gen);
    y[i] = 2.0 + 0.7 * X(i, 1) + 0.3 * nd(gen);
  }
  const GlmFit fit = irls_fit(Family::normal, Link::identity, X, y,
                              Eigen::VectorXd::Ones(n), cols(2));
  const auto rows = diagnostics(fit);
  REQUIRE(rows.size() == (size_t)n);
  double h_sum = 0.0, ss = 0.0;
  for (const auto& r : rows) {
    CHECK(r.leverage >= 0.0);
    CHECK(r.leverage < 1.0);
    CHECK(r.cooks >= 0.0);
    CHECK(std::isfinite(r.std_dev_res));
    h_sum += r.leverage;
    ss += r.dev_res * r.dev_res;
  }
  CHECK(h_sum == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(ss == doctest::Approx(fit.deviance).epsilon(1e-10));
}

TEST_CASE("diagnostics of an exactly interpolating fit are zero") {
  GlmFit fit;
  fit.family = Family::normal;
  fit.link = Link::identity;
  fit.y = Eigen::VectorXd::LinSpaced(3, 1.0, 5.0);
  fit.mu = fit.y;
  fit.dev_comp = Eigen::VectorXd::Zero(3);
  fit.hat = Eigen::VectorXd::Zero(3);
  fit.hat << 0.8, 0.4, 0.8;  // sums to p = 2
  fit.prior_w = Eigen::VectorXd::Ones(3);
  fit.beta = Eigen::VectorXd::Zero(2);
  fit.deviance = 0.0;
  for (const auto& r : diagnostics(fit)) {
    CHECK(r.dev_res == 0.0);
    CHECK(r.std_dev_res == 0.0);  // zero scale must not produce 0/0
    CHECK(r.cooks == 0.0);
  }
}

TEST_CASE("family and link names") {
  CHECK(parse_family("normal") == Family::normal);
  CHECK(parse_family("gamma") == Family::gamma);
  CHECK(parse_link("identity") == Link::identity);
  CHECK(parse_link("log") == Link::log_link);
  CHECK(family_name(Family::gamma) == "gamma");
  CHECK(link_name(Link::log_link) == "log");
  CHECK_THROWS_AS(parse_family("poisson"), usage_error);
  CHECK_THROWS_AS(parse_link("probit"), usage_error);
}

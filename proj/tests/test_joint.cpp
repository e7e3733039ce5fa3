// Joint mean–dispersion machinery: standardized deviances, the extended
// quasi-likelihood, arc-length metrics, adjusted R-squared criteria and the
// nested-model tests, plus the alternating fit on the bundled data.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "meandisp/dataset.hpp"
#include "meandisp/errors.hpp"
#include "meandisp/joint.hpp"
#include "meandisp/prob.hpp"
#include "meandisp/terms.hpp"

using namespace meandisp;

namespace {

const char* kBreadCsv = MEANDISP_DATA_DIR "/bread_volume.csv";

// Adaptive Simpson quadrature, used as an independent check of the
// closed-form arc lengths.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, 1e-12, 40);
}

struct BreadDesigns {
  Dataset data;
  TermSet mean_terms;
  TermSet disp_terms;
  Eigen::MatrixXd X;
  Eigen::MatrixXd U;
};

BreadDesigns load_bread_published() {
  Dataset data = load_csv(kBreadCsv);
  const VariableSet& vars = data.design.vars;
  TermSet mean_terms = TermSet::parse(
      "x1, x2, x3, x1*z2, x2*z2, x3*z2, x1*x3*z1", vars);
  TermSet disp_terms = TermSet::parse("x1, x2, x3, x2*x3", vars);
  Eigen::MatrixXd X = model_matrix(mean_terms, data.design);
  Eigen::MatrixXd U = model_matrix(disp_terms, data.design);
  return BreadDesigns{std::move(data), std::move(mean_terms),
                      std::move(disp_terms), std::move(X), std::move(U)};
}

}  // namespace

TEST_CASE("standardized deviance divides by one minus leverage and floors "
          "interpolated rows") {
  Eigen::VectorXd d(3), h(3);
  d << 0.0, 4.0, 8.0;
  h << 0.0, 0.5, 0.5;
  const Eigen::VectorXd ds = standardized_deviance(d, h);
  // raw values 0, 8, 16 -> mean 8; the zero entry is floored at 8e-10
  CHECK(ds[1] == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(ds[2] == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(ds[0] == doctest::Approx(8e-10).epsilon(1e-12));
  CHECK(ds[0] > 0.0);

  Eigen::VectorXd h_bad = h;
  h_bad[2] = 1.0;
  CHECK_THROWS_AS(standardized_deviance(d, h_bad), numeric_error);
  CHECK_THROWS_AS(
      standardized_deviance(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)),
      numeric_error);
}

TEST_CASE("extended quasi-likelihood value") {
  Eigen::VectorXd y(2), ds(2), phi(2);
  y << 1.0, 2.0;
  ds << 0.5, 1.0;
  phi << 2.0, 4.0;
  const double pi = 3.141592653589793238462643383279502884;
  // normal family: V(y) = 1
  double expect = -0.5 * (0.5 / 2.0 + std::log(2.0 * pi * 2.0)) +
                  -0.5 * (1.0 / 4.0 + std::log(2.0 * pi * 4.0));
  CHECK(q_plus_value(Family::normal, y, ds, phi) ==
        doctest::Approx(expect).epsilon(1e-14));
  // gamma family: V(y) = y^2
  expect = -0.5 * (0.5 / 2.0 + std::log(2.0 * pi * 2.0 * 1.0)) +
           -0.5 * (1.0 / 4.0 + std::log(2.0 * pi * 4.0 * 4.0));
  CHECK(q_plus_value(Family::gamma, y, ds, phi) ==
        doctest::Approx(expect).epsilon(1e-14));

  Eigen::VectorXd phi_bad = phi;
  phi_bad[0] = 0.0;
  CHECK_THROWS_AS(q_plus_value(Family::normal, y, ds, phi_bad), numeric_error);
}

TEST_CASE("information criteria") {
  CHECK(eaic(-10.0, 3, 20) == doctest::Approx(20.0 + 7.5).epsilon(1e-14));
  CHECK_THROWS_AS(eaic(0.0, 19, 20), numeric_error);

  // aicc for the dispersion submodel: exact gamma log-likelihood with shape
  // (1 - h)/4, recomputed here from scratch
  Eigen::VectorXd ds(3), phi(3), h(3);
  ds << 120.0, 80.0, 40.0;
  phi << 100.0, 90.0, 60.0;
  h << 0.2, 0.3, 0.4;
  double ll = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double k = (1.0 - h[i]) / 4.0;
    ll += k * std::log(k / phi[i]) + (k - 1.0) * std::log(ds[i]) -
          k * ds[i] / phi[i] - std::lgamma(k);
  }
  const int n = 3, q = 1;
  const double expect = -2.0 * ll + 2.0 * q * n / double(n - q - 1);
  CHECK(aicc_dispersion(ds, phi, h, q, n) ==
        doctest::Approx(expect).epsilon(1e-13));
  CHECK_THROWS_AS(aicc_dispersion(ds, phi, h, 2, 3), numeric_error);
}

TEST_CASE("arc-length metrics agree with numeric quadrature") {
  CHECK(mean_metric(Family::normal, 7.0, 1.0, 4.0) == doctest::Approx(9.0));
  CHECK(mean_metric(Family::normal, 7.0, 4.0, 1.0) == doctest::Approx(9.0));
  CHECK(mean_metric(Family::normal, 7.0, 2.0, 2.0) == 0.0);

  for (double phi : {0.2, 1.0, 3.5}) {
    for (auto [a, b] : {std::pair{0.5, 2.0}, {1.0, 1.3}, {0.1, 4.0}}) {
      auto f = [phi](double t) {
        return std::sqrt(1.0 + 4.0 * phi * phi * t * t);
      };
      const double len = integrate(f, a, b);
      CHECK(mean_metric(Family::gamma, phi, a, b) ==
            doctest::Approx(len * len).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(mean_metric(Family::gamma, 0.0, 1.0, 2.0), numeric_error);

  for (auto [a, b] : {std::pair{0.1, 0.9}, {2.0, 5.0}}) {
    auto f = [](double t) { return std::sqrt(1.0 + 4.0 * t * t); };
    const double len = integrate(f, a, b);
    CHECK(disp_metric(a, b) == doctest::Approx(len * len).epsilon(1e-8));
  }
  CHECK(disp_metric(3.0, 3.0) == 0.0);
}

TEST_CASE("penalties") {
  for (Penalty p : {Penalty::one, Penalty::sqrt_n, Penalty::log_n})
    CHECK(parse_penalty(penalty_name(p)) == p);
  CHECK(parse_penalty("one") == Penalty::one);
  CHECK(parse_penalty("sqrt") == Penalty::sqrt_n);
  CHECK(parse_penalty("log") == Penalty::log_n);
  CHECK(penalty_lambda(Penalty::one, 99) == 1.0);
  CHECK(penalty_lambda(Penalty::sqrt_n, 25) == doctest::Approx(5.0));
  CHECK(penalty_lambda(Penalty::log_n, 10) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK_THROWS_AS(parse_penalty("bic"), usage_error);
}

TEST_CASE("unit-penalty adjusted R-squared for a normal model matches the "
          "classical formula") {
  std::mt19937 gen(41);
  std::normal_distribution<double> nd;
  const int n = 24;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(gen);
    X(i, 2) = nd(gen);
    y[i] = 1.0 + 0.5 * X(i, 1) - 0.2 * X(i, 2) + nd(gen);
  }
  const GlmFit fit = irls_fit(Family::normal, Link::identity, X, y,
                              Eigen::VectorXd::Ones(n), {"1", "a", "b"});
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(n);
  const double rss = (y - fit.mu).squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  const double classical = 1.0 - (rss / (n - 3.0)) / (tss / (n - 1.0));
  CHECK(r2_tilde_mean(fit, phi, Penalty::one) ==
        doctest::Approx(classical).epsilon(1e-10));

  // a heavy enough penalty drives the denominator nonpositive
  Eigen::MatrixXd Xs = X.topRows(9);
  Eigen::VectorXd ys = y.head(9);
  const GlmFit small = irls_fit(Family::normal, Link::identity, Xs, ys,
                                Eigen::VectorXd::Ones(9), {"1", "a", "b"});
  CHECK(r2_tilde_mean(small, Eigen::VectorXd::Ones(9), Penalty::sqrt_n) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("models without a constant term are benchmarked at a zero linear "
          "predictor") {
  Eigen::MatrixXd X(4, 1);
  X << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd y(4);
  y << 1.1, 1.9, 3.2, 3.8;
  const GlmFit fit = irls_fit(Family::normal, Link::identity, X, y,
                              Eigen::VectorXd::Ones(4), {"x"});
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(4);
  const double rss = (y - fit.mu).squaredNorm();
  const double tss0 = y.squaredNorm();  // benchmark mu = 0, not y-bar
  const double expect = 1.0 - (rss / (4.0 - 1.0)) / (tss0 / 3.0);
  CHECK(r2_tilde_mean(fit, phi, Penalty::one) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("intercept-only dispersion fit scores zero under the unit penalty") {
  Eigen::VectorXd ds(6);
  ds << 0.4, 1.3, 2.8, 0.9, 2.1, 5.0;
  const GlmFit fit =
      irls_fit(Family::gamma, Link::log_link, Eigen::MatrixXd::Ones(6, 1), ds,
               Eigen::VectorXd::Ones(6), {"1"}, {}, 2.0);
  CHECK(std::abs(r2_tilde_disp(fit, Penalty::one)) < 1e-8);
  // heavier penalties make an intercept-only fit score negative
  CHECK(r2_tilde_disp(fit, Penalty::sqrt_n) < 0.0);
}

TEST_CASE("nested-model tests") {
  const TestResult f = f_test(100.0, 40.0, 3, 6, 30);
  CHECK(f.df1 == 3.0);
  CHECK(f.df2 == 24.0);
  CHECK(f.stat == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(f.p == doctest::Approx(f_upper_p(12.0, 3, 24)).epsilon(1e-14));

  // rescaling every weighted deviance (phi -> c phi) leaves F unchanged
  for (double c : {0.1, 10.0}) {
    const TestResult fc = f_test(100.0 * c, 40.0 * c, 3, 6, 30);
    CHECK(fc.stat == doctest::Approx(12.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(f_test(100.0, 40.0, 6, 3, 30), numeric_error);
  CHECK(f_test(40.0, 100.0, 3, 6, 30).stat == 0.0);  // clamped, p = 1
  CHECK(f_test(40.0, 100.0, 3, 6, 30).p == doctest::Approx(1.0));

  const TestResult c2 = chisq_test(10.0, 3.0, 1, 2);
  CHECK(c2.stat == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(c2.df1 == 1.0);
  CHECK(c2.df2 == 0.0);
  CHECK(c2.p == doctest::Approx(chisq_upper_p(3.5, 1)).epsilon(1e-14));
  const TestResult c1 = chisq_test(10.0, 3.0, 1, 2, 1.0);
  CHECK(c1.stat == doctest::Approx(7.0).epsilon(1e-14));
  CHECK_THROWS_AS(chisq_test(1.0, 0.5, 2, 2), numeric_error);
}

TEST_CASE("alternating fit with a constant dispersion model converges to "
          "equal dispersions") {
  std::mt19937 gen(7);
  std::normal_distribution<double> nd;
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(gen);
    y[i] = 3.0 + 2.0 * X(i, 1) + 0.5 * nd(gen);
  }
  const Eigen::MatrixXd U = Eigen::MatrixXd::Ones(n, 1);
  const JointFit fit = fit_joint(X, {"1", "x"}, U, {"1"}, y);
  CHECK(fit.converged);
  CHECK(fit.iterations == 2);  // nothing changes after the first alternation
  CHECK(fit.q_history.size() == 2);
  CHECK(fit.phi.maxCoeff() ==
        doctest::Approx(fit.phi.minCoeff()).epsilon(1e-12));
  // the intercept-only gamma fit reproduces the mean standardized deviance
  CHECK(fit.phi[0] == doctest::Approx(fit.d_star.mean()).epsilon(1e-9));
  CHECK(fit.q_plus == doctest::Approx(fit.q_history.back()).epsilon(1e-14));
}

TEST_CASE("alternating fit on the bundled data with the published term sets") {
  const BreadDesigns b = load_bread_published();
  REQUIRE(b.data.n() == 90);
  const JointFit fit = fit_joint(b.X, b.mean_terms.names(), b.U,
                                 b.disp_terms.names(), b.data.y);
  CHECK(fit.converged);
  CHECK(fit.q_plus == doctest::Approx(-423.2637).epsilon(2e-5));

  // mean coefficients at the joint fixed point stay within 0.5 percent of
  // the selection-time snapshot values
  const std::vector<std::pair<std::string, double>> mean_expect = {
      {"x1", 488.961}, {"x2", 432.210},    {"x3", 574.124},
      {"x1*z2", 56.621}, {"x2*z2", 35.904}, {"x3*z2", 79.146},
      {"x1*x3*z1", 174.216}};
  const std::vector<std::string> mean_names = b.mean_terms.names();
  for (const auto& [name, value] : mean_expect) {
    const auto it = std::find(mean_names.begin(), mean_names.end(), name);
    REQUIRE(it != mean_names.end());
    const int j = static_cast<int>(it - mean_names.begin());
    CHECK(fit.mean.beta[j] == doctest::Approx(value).epsilon(0.005));
  }

  // dispersion main effects likewise; the blend interaction moves a little
  // more once the alternation is run to its fixed point
  const std::vector<std::string> disp_names = b.disp_terms.names();
  const std::vector<std::pair<std::string, double>> disp_expect = {
      {"x1", 6.9984}, {"x2", 5.9400}, {"x3", 7.3250}};
  for (const auto& [name, value] : disp_expect) {
    const auto it = std::find(disp_names.begin(), disp_names.end(), name);
    REQUIRE(it != disp_names.end());
    const int j = static_cast<int>(it - disp_names.begin());
    CHECK(fit.dispersion.beta[j] == doctest::Approx(value).epsilon(0.005));
  }
  const auto it = std::find(disp_names.begin(), disp_names.end(), "x2*x3");
  REQUIRE(it != disp_names.end());
  CHECK(fit.dispersion.beta[it - disp_names.begin()] ==
        doctest::Approx(-7.7443).epsilon(1e-3));

  // the dispersion submodel is fit with unit prior weights and fixed scale 2
  CHECK(fit.dispersion.fixed_dispersion == 2.0);
  CHECK(fit.dispersion.prior_w.minCoeff() == 1.0);
  CHECK(fit.dispersion.prior_w.maxCoeff() == 1.0);
  // the mean fit carries the reciprocal dispersions as prior weights (one
  // alternation behind the final dispersion update, hence the loose match)
  for (int i = 0; i < 5; ++i)
    CHECK(fit.mean.prior_w[i] ==
          doctest::Approx(1.0 / fit.phi[i]).epsilon(1e-4));
}

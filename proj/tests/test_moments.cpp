// Unconditional mean and variance of the response over the noise-variable
// distribution, checked against hand arithmetic and a Monte Carlo oracle.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "meandisp/errors.hpp"
#include "meandisp/moments.hpp"

using namespace meandisp;

namespace {

const VariableSet kVars = VariableSet::standard(3, 2);

// the selected bread-volume models
const char* kMeanTerms = "x1, x2, x3, x1*z2, x2*z2, x3*z2, x1*x3*z1";
const char* kDispTerms = "x1, x2, x3, x2*x3";

Eigen::VectorXd mean_coefs() {
  Eigen::VectorXd b(7);
  // canonical order: x1, x2, x3, x1*x3*z1, x1*z2, x2*z2, x3*z2
  b << 488.961, 432.210, 574.124, 174.216, 56.621, 35.904, 79.146;
  return b;
}

Eigen::VectorXd disp_coefs() {
  Eigen::VectorXd g(4);
  g << 6.9984, 5.9400, 7.3250, -7.9662;
  return g;
}

NoiseDistribution standard_noise() {
  NoiseDistribution noise;
  noise.mean = Eigen::VectorXd::Zero(2);
  noise.variance = Eigen::VectorXd::Ones(2);
  return noise;
}

MomentModel bread_moments(const NoiseDistribution& noise) {
  return unconditional_moments(
      TermSet::parse(kMeanTerms, kVars), mean_coefs(),
      TermSet::parse(kDispTerms, kVars), disp_coefs(), Family::normal,
      Link::identity, Link::log_link, noise);
}

}  // namespace

TEST_CASE("zero-mean noise drops every noise term from the mean") {
  const MixturePolynomial poly =
      unconditional_mean(TermSet::parse(kMeanTerms, kVars), mean_coefs(),
                         standard_noise());
  // every term is purely a mixture monomial, and whatever the noise terms
  // left behind carries an exactly zero coefficient
  for (size_t j = 0; j < poly.terms.size(); ++j) {
    CHECK(poly.terms[j].process_degree() == 0);
    if (!poly.terms[j].is_mixture_main()) CHECK(poly.coefs[j] == 0.0);
  }
  Eigen::RowVectorXd x(3);
  x << 1.0, 0.0, 0.0;
  CHECK(poly.eval(x) == doctest::Approx(488.961));
  x << 0.0, 0.5, 0.5;
  CHECK(poly.eval(x) == doctest::Approx(0.5 * 432.210 + 0.5 * 574.124));
}

TEST_CASE("nonzero noise means merge into the mixture coefficients") {
  NoiseDistribution noise = standard_noise();
  noise.mean << 0.5, -1.0;  // E z1 = 0.5, E z2 = -1
  const MixturePolynomial poly =
      unconditional_mean(TermSet::parse(kMeanTerms, kVars), mean_coefs(),
                         standard_noise());
  const MixturePolynomial shifted =
      unconditional_mean(TermSet::parse(kMeanTerms, kVars), mean_coefs(),
                         noise);
  // x1: 488.961 + (-1) * 56.621; x1*x3 gains 0.5 * 174.216
  Eigen::RowVectorXd x(3);
  x << 1.0, 0.0, 0.0;
  CHECK(shifted.eval(x) == doctest::Approx(488.961 - 56.621).epsilon(1e-12));
  x << 0.5, 0.0, 0.5;
  const double expect = 0.5 * (488.961 - 56.621) + 0.5 * (574.124 - 79.146) +
                        0.25 * 0.5 * 174.216;
  CHECK(shifted.eval(x) == doctest::Approx(expect).epsilon(1e-12));
  // with zero means the same point is just the blend of the mains
  CHECK(poly.eval(x) ==
        doctest::Approx(0.5 * 488.961 + 0.5 * 574.124).epsilon(1e-12));
}

TEST_CASE("noise paths collect the mixture parts of each noise variable") {
  const MomentModel m = bread_moments(standard_noise());
  REQUIRE(m.noise_paths.size() == 2);

  Eigen::RowVectorXd x(3);
  x << 0.4, 0.1, 0.5;
  // z1 rides on x1*x3 alone
  CHECK(m.noise_paths[0].eval(x) ==
        doctest::Approx(174.216 * 0.4 * 0.5).epsilon(1e-12));
  // z2 rides on the three mains
  CHECK(m.noise_paths[1].eval(x) ==
        doctest::Approx(56.621 * 0.4 + 35.904 * 0.1 + 79.146 * 0.5)
            .epsilon(1e-12));
}

TEST_CASE("variance at a vertex adds the dispersion and the squared z2 path") {
  const MomentModel m = bread_moments(standard_noise());
  Eigen::RowVectorXd x(3);
  x << 1.0, 0.0, 0.0;
  CHECK(m.mean_at(x) == doctest::Approx(488.961).epsilon(1e-12));
  const double expect = std::exp(6.9984) + 56.621 * 56.621;
  CHECK(m.variance_at(x) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(m.variance_at(x) == doctest::Approx(4300.81).epsilon(1e-5));

  // noise variances scale the squared paths
  NoiseDistribution tight = standard_noise();
  tight.variance << 1.0, 0.25;
  const MomentModel mt = bread_moments(tight);
  CHECK(mt.variance_at(x) ==
        doctest::Approx(std::exp(6.9984) + 0.25 * 56.621 * 56.621)
            .epsilon(1e-12));
}

TEST_CASE("moment propagation matches Monte Carlo simulation") {
  const NoiseDistribution noise = standard_noise();
  const MomentModel m = bread_moments(noise);

  const TermSet mean_terms = TermSet::parse(kMeanTerms, kVars);
  const Eigen::VectorXd b = mean_coefs();
  const TermSet disp_terms = TermSet::parse(kDispTerms, kVars);
  const Eigen::VectorXd g = disp_coefs();

  Eigen::RowVectorXd x(3);
  x << 0.3, 0.2, 0.5;

  std::mt19937_64 gen(777);
  std::normal_distribution<double> nd;
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n; ++s) {
    Eigen::RowVectorXd z(2);
    z << nd(gen), nd(gen);
    double eta = 0.0;
    for (int j = 0; j < mean_terms.size(); ++j)
      eta += b[j] * mean_terms.terms()[j].eval(x, z);
    double xi = 0.0;
    for (int j = 0; j < disp_terms.size(); ++j)
      xi += g[j] * disp_terms.terms()[j].eval(x, z);
    const double y = eta + std::sqrt(std::exp(xi)) * nd(gen);
    sum += y;
    sumsq += y * y;
  }
  const double mc_mean = sum / n;
  const double mc_var = sumsq / n - mc_mean * mc_mean;

  // 4-sigma Monte Carlo bands
  const double true_var = m.variance_at(x);
  CHECK(std::abs(m.mean_at(x) - mc_mean) < 4.0 * std::sqrt(true_var / n));
  // Var of the sample variance of a mixture is near 2 var^2 / n plus the
  // kurtosis of the mixing; 3x covers it comfortably at 4 sigma
  CHECK(std::abs(true_var - mc_var) <
        4.0 * std::sqrt(3.0 * 2.0 * true_var * true_var / n));
}

TEST_CASE("unsupported structures are rejected by name") {
  const NoiseDistribution noise = standard_noise();

  // quadratic in a noise variable
  CHECK_THROWS_AS(
      unconditional_mean(TermSet::parse("x1, x1*z2^2", kVars),
                         Eigen::VectorXd::Ones(2), noise),
      usage_error);
  // two noise variables in one term
  CHECK_THROWS_AS(
      unconditional_mean(TermSet::parse("x1, x1*z1*z2", kVars),
                         Eigen::VectorXd::Ones(2), noise),
      usage_error);
  // noise variables inside the dispersion model
  CHECK_THROWS_AS(
      unconditional_moments(TermSet::parse("x1, x2, x3", kVars),
                            Eigen::VectorXd::Ones(3),
                            TermSet::parse("x1, x2, x3, x1*z1", kVars),
                            Eigen::VectorXd::Ones(4), Family::normal,
                            Link::identity, Link::log_link, noise),
      usage_error);
  // only the normal/identity mean is propagated exactly
  CHECK_THROWS_AS(
      unconditional_moments(TermSet::parse("x1, x2, x3", kVars),
                            Eigen::VectorXd::Ones(3),
                            TermSet::parse("x1, x2, x3", kVars),
                            Eigen::VectorXd::Ones(3), Family::gamma,
                            Link::log_link, Link::log_link, noise),
      usage_error);

  // coefficient/term length mismatch
  CHECK_THROWS(unconditional_mean(TermSet::parse("x1, x2", kVars),
                                  Eigen::VectorXd::Ones(3), noise));
}

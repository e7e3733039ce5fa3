// Probability kernels: values are checked against an independent reference
// implementation (SciPy 1.x special functions / distribution tails), frozen
// here, plus the closed-form identities the functions must satisfy.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meandisp/errors.hpp"
#include "meandisp/prob.hpp"

using namespace meandisp;

TEST_CASE("regularized incomplete gamma against reference values") {
  struct Row {
    double a, x, p;
  };
  const Row rows[] = {
      {0.5, 0.25, 5.2049987781304663e-01},
      {1.0, 1.0, 6.3212055882855767e-01},
      {2.5, 0.5, 3.7434226752703609e-02},
      {2.5, 4.0, 8.4376437242227786e-01},
      {10.0, 9.5, 4.7817397776279236e-01},
      {45.0, 50.0, 7.7895976737455530e-01},
      {0.1, 3.0, 9.9843472825288559e-01},
  };
  for (const Row& r : rows) {
    CHECK(reg_gamma_lower(r.a, r.x) == doctest::Approx(r.p).epsilon(1e-12));
    CHECK(reg_gamma_upper(r.a, r.x) ==
          doctest::Approx(1.0 - r.p).epsilon(1e-10));
  }
}

TEST_CASE("incomplete gamma complements and limits") {
  for (double a : {0.3, 1.0, 4.5, 30.0})
    for (double x : {0.01, 0.5, 2.0, 25.0}) {
      CHECK(reg_gamma_lower(a, x) + reg_gamma_upper(a, x) ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
  CHECK(reg_gamma_lower(2.0, 0.0) == 0.0);
  CHECK(reg_gamma_upper(2.0, 0.0) == 1.0);
  // exponential special case: P(1, x) = 1 - e^{-x}
  for (double x : {0.1, 1.0, 7.0})
    CHECK(reg_gamma_lower(1.0, x) ==
          doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
}

TEST_CASE("regularized incomplete beta against reference values") {
  struct Row {
    double a, b, x, v;
  };
  const Row rows[] = {
      {0.5, 0.5, 0.3, 3.6901011956554536e-01},
      {2.0, 3.0, 0.4, 5.2479999999999993e-01},
      {5.0, 1.5, 0.9, 7.7617213431621590e-01},
      {45.0, 45.0, 0.5, 4.9999999999999978e-01},
      {0.5, 8.0, 0.02, 4.2435089402967563e-01},
      {7.0, 0.3, 0.995, 6.0131243638373333e-01},
  };
  for (const Row& r : rows)
    CHECK(reg_beta(r.a, r.b, r.x) == doctest::Approx(r.v).epsilon(1e-12));
}

TEST_CASE("incomplete beta symmetry and edges") {
  for (double a : {0.4, 2.0, 9.0})
    for (double b : {0.7, 3.5})
      for (double x : {0.05, 0.35, 0.8}) {
        CHECK(reg_beta(a, b, x) ==
              doctest::Approx(1.0 - reg_beta(b, a, 1.0 - x)).epsilon(1e-12));
      }
  CHECK(reg_beta(2.0, 5.0, 0.0) == 0.0);
  CHECK(reg_beta(2.0, 5.0, 1.0) == 1.0);
}

TEST_CASE("chi-square upper tail") {
  struct Row {
    double x, df, p;
  };
  const Row rows[] = {
      {4.7674, 1, 2.9003595377523471e-02},
      {1.692, 1, 1.9333753486462790e-01},
      {6.821, 2, 3.3024683905160765e-02},
      {0.0109, 2, 9.9456482430694904e-01},
      {3.84, 1, 5.0043521248705189e-02},
      {0.5, 3, 9.1889141165467580e-01},
      {25.0, 10, 5.3455054871340687e-03},
      {110.9964, 2, 7.8965608153119316e-25},
  };
  for (const Row& r : rows)
    CHECK(chisq_upper_p(r.x, r.df) == doctest::Approx(r.p).epsilon(1e-10));
  // two degrees of freedom has the closed form e^{-x/2}
  for (double x : {0.3, 2.0, 11.0})
    CHECK(chisq_upper_p(x, 2.0) ==
          doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-13));
}

TEST_CASE("F upper tail") {
  struct Row {
    double f, d1, d2, p;
  };
  const Row rows[] = {
      {91.5536, 1, 84, 4.2645901214369434e-15},
      {26.354, 1, 85, 1.7755658120262121e-06},
      {34.3746, 1, 86, 8.2114941167536528e-08},
      {8.5463, 1, 87, 4.4123945753091580e-03},
      {1.0, 3, 10, 4.3233720302169698e-01},
      {4.0, 2, 20, 3.4571613033607777e-02},
      {0.2217, 1, 88, 6.3891271383551862e-01},
  };
  for (const Row& r : rows)
    CHECK(f_upper_p(r.f, r.d1, r.d2) == doctest::Approx(r.p).epsilon(1e-9));
  // F(1, d) equals a squared t with d degrees of freedom (two-sided)
  for (double f : {0.5, 3.2, 9.0})
    for (double d : {5.0, 60.0})
      CHECK(f_upper_p(f, 1.0, d) ==
            doctest::Approx(t_two_sided_p(std::sqrt(f), d)).epsilon(1e-12));
}

TEST_CASE("two-sided t probabilities") {
  struct Row {
    double t, df, p;
  };
  const Row rows[] = {
      {2.0, 10, 7.3388034770740393e-02},
      {-2.307, 86, 2.3457955942491150e-02},
      {67.323, 83, 3.3269506221136425e-74},
      {0.5, 5, 6.3829887164092902e-01},
      {3.762, 83, 3.1310869807929417e-04},
  };
  for (const Row& r : rows)
    CHECK(t_two_sided_p(r.t, r.df) == doctest::Approx(r.p).epsilon(1e-9));
  CHECK(t_two_sided_p(0.0, 7.0) == doctest::Approx(1.0));
  CHECK(t_two_sided_p(1.5, 12.0) == t_two_sided_p(-1.5, 12.0));
}

TEST_CASE("normal quantile") {
  struct Row {
    double p, z;
  };
  const Row rows[] = {
      {0.001, -3.0902323061678132e+00},
      {0.025, -1.9599639845400545e+00},
      {0.5, 0.0},
      {0.841344746068543, 1.0},
      {0.975, 1.9599639845400540e+00},
      {0.999999, 4.7534243088170873e+00},
  };
  for (const Row& r : rows)
    CHECK(normal_quantile(r.p) == doctest::Approx(r.z).epsilon(1e-12));
  // inverse of the normal CDF written through erfc
  for (double x : {-2.5, -0.3, 0.0, 1.7, 3.1}) {
    const double p = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(normal_quantile(p) == doctest::Approx(x).epsilon(1e-11));
  }
  CHECK(normal_quantile(0.25) == -normal_quantile(0.75));
}

TEST_CASE("tail probabilities are monotone") {
  double last = 1.0;
  for (double x : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double p = chisq_upper_p(x, 3.0);
    CHECK(p <= last + 1e-15);
    last = p;
  }
  last = 1.0;
  for (double f : {0.0, 0.3, 1.0, 2.5, 7.0, 30.0}) {
    const double p = f_upper_p(f, 2.0, 17.0);
    CHECK(p <= last + 1e-15);
    last = p;
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(reg_gamma_lower(-1.0, 1.0), numeric_error);
  CHECK_THROWS_AS(reg_gamma_upper(0.0, 1.0), numeric_error);
  CHECK_THROWS_AS(reg_beta(0.0, 1.0, 0.5), numeric_error);
  CHECK_THROWS_AS(reg_beta(1.0, 1.0, 1.5), numeric_error);
  CHECK_THROWS_AS(chisq_upper_p(1.0, 0.0), numeric_error);
  CHECK_THROWS_AS(f_upper_p(1.0, 0.0, 5.0), numeric_error);
  CHECK_THROWS_AS(t_two_sided_p(1.0, 0.0), numeric_error);
  CHECK_THROWS_AS(normal_quantile(0.0), numeric_error);
  CHECK_THROWS_AS(normal_quantile(1.0), numeric_error);
}

#ifndef MEANDISP_MOMENTS_HPP
#define MEANDISP_MOMENTS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meandisp/glm.hpp"
#include "meandisp/terms.hpp"

namespace meandisp {

// Independent noise variables, one (mean, variance) pair per process column.
struct NoiseDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// A polynomial in the mixture variables only (process exponents all zero).
struct MixturePolynomial {
  VariableSet vars;
  std::vector<Term> terms;
  Eigen::VectorXd coefs;

  double eval(const Eigen::RowVectorXd& x) const;
};

// Unconditional moments of Y over the noise distribution, valid for a
// Normal/identity mean whose terms are at most linear in one noise variable
// each, with a noise-free log-link dispersion:
//   E(Y)(x)   = mean predictor with each z_j replaced by its mean
//   Var(Y)(x) = exp(dispersion predictor) + sum_j var_j * path_j(x)^2
// where path_j collects the mixture parts of the terms carrying z_j.
struct MomentModel {
  MixturePolynomial mean;
  MixturePolynomial log_dispersion;
  std::vector<MixturePolynomial> noise_paths;
  Eigen::VectorXd noise_variance;

  double mean_at(const Eigen::RowVectorXd& x) const;
  double variance_at(const Eigen::RowVectorXd& x) const;
};

// E(Y) alone: substitutes noise means into the conditional mean predictor
// and merges terms with equal mixture parts. Terms quadratic in the noise or
// mixing two noise variables are unsupported and rejected by name.
MixturePolynomial unconditional_mean(const TermSet& mean_terms,
                                     const Eigen::VectorXd& mean_coefs,
                                     const NoiseDistribution& noise);

// Full moment propagation. Requires the Normal family with identity link for
// the mean and a log-link dispersion model free of noise variables.
MomentModel unconditional_moments(const TermSet& mean_terms,
                                  const Eigen::VectorXd& mean_coefs,
                                  const TermSet& disp_terms,
                                  const Eigen::VectorXd& disp_coefs,
                                  Family mean_family, Link mean_link,
                                  Link disp_link,
                                  const NoiseDistribution& noise);

}  // namespace meandisp

#endif

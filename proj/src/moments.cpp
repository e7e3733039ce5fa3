#include "meandisp/moments.hpp"

#include <algorithm>
#include <cmath>

#include "meandisp/errors.hpp"

namespace meandisp {

namespace {

void check_noise(const NoiseDistribution& noise, const VariableSet& vars) {
  const int r = vars.n_process();
  if (noise.mean.size() != r || noise.variance.size() != r)
    throw usage_error("noise distribution needs one mean and one variance "
                      "per process variable (" + std::to_string(r) + ")");
  for (int j = 0; j < r; ++j)
    if (noise.variance[j] < 0.0)
      throw usage_error("negative noise variance for '" +
                        vars.process[static_cast<size_t>(j)] + "'");
}

// Index of the single noise variable in the term, -1 if noise-free. Terms
// quadratic in any z or carrying two different z's are outside the scope of
// the propagation formulas.
int single_noise_index(const Term& t, const VariableSet& vars) {
  int found = -1;
  for (size_t j = 0; j < t.proc_exp.size(); ++j) {
    const int e = t.proc_exp[j];
    if (e == 0) continue;
    if (e > 1 || found >= 0)
      throw usage_error("term '" + term_to_string(t, vars) +
                        "' is not linear in a single noise variable; moment "
                        "propagation does not cover it");
    found = static_cast<int>(j);
  }
  return found;
}

Term mixture_part(const Term& t) {
  Term m = t;
  std::fill(m.proc_exp.begin(), m.proc_exp.end(), 0);
  return m;
}

void add_term(MixturePolynomial& poly, const Term& t, double coef) {
  for (size_t k = 0; k < poly.terms.size(); ++k) {
    if (poly.terms[k] == t) {
      poly.coefs[static_cast<Eigen::Index>(k)] += coef;
      return;
    }
  }
  const auto pos = std::lower_bound(poly.terms.begin(), poly.terms.end(), t,
                                    term_less);
  const Eigen::Index at = pos - poly.terms.begin();
  poly.terms.insert(pos, t);
  Eigen::VectorXd grown(poly.coefs.size() + 1);
  grown.head(at) = poly.coefs.head(at);
  grown[at] = coef;
  grown.tail(poly.coefs.size() - at) = poly.coefs.tail(poly.coefs.size() - at);
  poly.coefs = std::move(grown);
}

MixturePolynomial empty_poly(const VariableSet& vars) {
  return MixturePolynomial{vars, {}, Eigen::VectorXd(0)};
}

}  // namespace

double MixturePolynomial::eval(const Eigen::RowVectorXd& x) const {
  if (x.size() != vars.n_mixture())
    throw usage_error("evaluation point has " + std::to_string(x.size()) +
                      " components, expected " +
                      std::to_string(vars.n_mixture()));
  const Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(vars.n_process());
  double value = 0.0;
  for (size_t k = 0; k < terms.size(); ++k)
    value += coefs[static_cast<Eigen::Index>(k)] * terms[k].eval(x, z);
  return value;
}

double MomentModel::mean_at(const Eigen::RowVectorXd& x) const {
  return mean.eval(x);
}

double MomentModel::variance_at(const Eigen::RowVectorXd& x) const {
  double var = std::exp(log_dispersion.eval(x));
  for (size_t j = 0; j < noise_paths.size(); ++j) {
    const double path = noise_paths[j].eval(x);
    var += noise_variance[static_cast<Eigen::Index>(j)] * path * path;
  }
  return var;
}

MixturePolynomial unconditional_mean(const TermSet& mean_terms,
                                     const Eigen::VectorXd& mean_coefs,
                                     const NoiseDistribution& noise) {
  const VariableSet& vars = mean_terms.variables();
  check_noise(noise, vars);
  if (mean_coefs.size() != mean_terms.size())
    throw usage_error("unconditional_mean: coefficient count mismatch");

  MixturePolynomial out = empty_poly(vars);
  const auto& terms = mean_terms.terms();
  for (size_t k = 0; k < terms.size(); ++k) {
    const double coef = mean_coefs[static_cast<Eigen::Index>(k)];
    const int j = single_noise_index(terms[k], vars);
    if (j < 0)
      add_term(out, terms[k], coef);
    else
      add_term(out, mixture_part(terms[k]), coef * noise.mean[j]);
  }
  return out;
}

MomentModel unconditional_moments(const TermSet& mean_terms,
                                  const Eigen::VectorXd& mean_coefs,
                                  const TermSet& disp_terms,
                                  const Eigen::VectorXd& disp_coefs,
                                  Family mean_family, Link mean_link,
                                  Link disp_link,
                                  const NoiseDistribution& noise) {
  const VariableSet& vars = mean_terms.variables();
  check_noise(noise, vars);
  if (mean_family != Family::normal || mean_link != Link::identity)
    throw usage_error("moment propagation requires a normal/identity mean "
                      "model");
  if (disp_link != Link::log_link)
    throw usage_error("moment propagation requires a log-link dispersion "
                      "model");
  if (disp_coefs.size() != disp_terms.size())
    throw usage_error("unconditional_moments: dispersion coefficient count "
                      "mismatch");

  MomentModel model{empty_poly(vars),
                    empty_poly(vars),
                    {},
                    noise.variance};
  model.mean = unconditional_mean(mean_terms, mean_coefs, noise);

  for (int j = 0; j < vars.n_process(); ++j)
    model.noise_paths.push_back(empty_poly(vars));
  const auto& mterms = mean_terms.terms();
  for (size_t k = 0; k < mterms.size(); ++k) {
    const int j = single_noise_index(mterms[k], vars);
    if (j >= 0)
      add_term(model.noise_paths[static_cast<size_t>(j)],
               mixture_part(mterms[k]),
               mean_coefs[static_cast<Eigen::Index>(k)]);
  }

  const auto& dterms = disp_terms.terms();
  for (size_t k = 0; k < dterms.size(); ++k) {
    if (dterms[k].process_degree() > 0)
      throw usage_error("dispersion term '" +
                        term_to_string(dterms[k], vars) +
                        "' contains a noise variable; moment propagation "
                        "does not cover it");
    add_term(model.log_dispersion, dterms[k],
             disp_coefs[static_cast<Eigen::Index>(k)]);
  }
  return model;
}

}  // namespace meandisp

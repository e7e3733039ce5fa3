#ifndef MEANDISP_GLM_HPP
#define MEANDISP_GLM_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace meandisp {

enum class Family { normal, gamma };
enum class Link { identity, log_link };

Family parse_family(const std::string& name);
Link parse_link(const std::string& name);
std::string family_name(Family f);
std::string link_name(Link l);

// Variance function V(mu): 1 for the normal family, mu^2 for the gamma.
double variance_function(Family f, double mu);

// Unit deviance d(y, mu) = 2 * integral from mu to y of (y - l)/V(l) dl.
// Normal: (y - mu)^2. Gamma: 2 * (-log(y/mu) + (y - mu)/mu).
double deviance_component(Family f, double y, double mu);

struct IrlsOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_iter = 50;
};

struct WlsSolution {
  Eigen::VectorXd beta;
  Eigen::VectorXd hat;           // leverage of each observation, in [0, 1)
  Eigen::MatrixXd cov_unscaled;  // (X' W X)^-1
};

// Weighted least squares through a column-pivoted QR factorization of
// sqrt(W) X. Never forms the normal equations. Throws numeric_error naming
// the offending column when the weighted design is rank deficient.
WlsSolution wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                      const Eigen::VectorXd& w,
                      const std::vector<std::string>& col_names);

struct GlmFit {
  Family family = Family::normal;
  Link link = Link::identity;
  // Dispersion handling: > 0 means the scale is a fixed constant (the
  // dispersion submodel uses 2); 0 means it is estimated as deviance/(n-p)
  // where a scale is needed.
  double fixed_dispersion = 0.0;

  std::vector<std::string> col_names;
  Eigen::VectorXd y;
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
  Eigen::VectorXd hat;
  Eigen::VectorXd dev_comp;   // unit deviances d_i
  Eigen::VectorXd prior_w;
  Eigen::VectorXd working_w;  // weights of the final least-squares step
  Eigen::MatrixXd cov_unscaled;
  double deviance = 0.0;      // sum of prior_w_i * d_i
  int iterations = 0;
  bool converged = false;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(beta.size()); }
  double scale_estimate() const;
  // Moment estimate of the dispersion scale: sum of prior_w_i (y_i-mu_i)^2 /
  // V(mu_i) over n-p. This is what the Wald tables are scaled by.
  double pearson_scale() const;
};

// Fisher-scoring IRLS fit. prior_w holds the per-observation prior weights
// (for the mean submodel these are 1/phi_i, so a per-observation dispersion
// enters here; the dispersion submodel is fit with unit weights).
GlmFit irls_fit(Family family, Link link, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, const Eigen::VectorXd& prior_w,
                const std::vector<std::string>& col_names,
                const IrlsOptions& opts = {}, double fixed_dispersion = 0.0);

struct WaldRow {
  std::string term;
  double estimate;
  double se;
  double t;
  double p;  // two-sided, t distribution with n - p degrees of freedom
};

std::vector<WaldRow> wald_table(const GlmFit& fit, double dispersion_scale);

struct DiagnosticsRow {
  double fitted;
  double dev_res;      // sign(y - mu) sqrt(d)
  double std_dev_res;  // scaled by prior weight, dispersion and leverage
  double cooks;        // (std residual)^2 h / (p (1 - h))
  double leverage;
};

std::vector<DiagnosticsRow> diagnostics(const GlmFit& fit);

}  // namespace meandisp

#endif

#include "meandisp/joint.hpp"

#include <cmath>
#include <limits>

#include "meandisp/errors.hpp"
#include "meandisp/prob.hpp"

namespace meandisp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDStarFloor = 1e-10;

double gamma_log_density(double x, double shape, double mean) {
  if (x <= 0.0 || shape <= 0.0 || mean <= 0.0)
    throw numeric_error("gamma log density needs positive x, shape and mean");
  return shape * std::log(shape / mean) + (shape - 1.0) * std::log(x) -
         shape * x / mean - std::lgamma(shape);
}

}  // namespace

Eigen::VectorXd standardized_deviance(const Eigen::VectorXd& dev_comp,
                                      const Eigen::VectorXd& hat) {
  if (dev_comp.size() != hat.size())
    throw numeric_error("standardized_deviance: length mismatch");
  const Eigen::Index n = dev_comp.size();
  Eigen::VectorXd d_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = 1.0 - hat[i];
    if (denom <= 0.0)
      throw numeric_error("standardized_deviance: leverage at 1 in row " +
                          std::to_string(i + 1));
    d_star[i] = dev_comp[i] / denom;
  }
  const double mean = d_star.mean();
  if (mean <= 0.0)
    throw numeric_error("standardized_deviance: the mean fit interpolates "
                        "every observation, no dispersion is identifiable");
  for (Eigen::Index i = 0; i < n; ++i)
    d_star[i] = std::max(d_star[i], kDStarFloor * mean);
  return d_star;
}

double q_plus_value(Family mean_family, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& d_star,
                    const Eigen::VectorXd& phi) {
  if (y.size() != d_star.size() || y.size() != phi.size())
    throw numeric_error("q_plus_value: length mismatch");
  double q = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (phi[i] <= 0.0)
      throw numeric_error("q_plus_value: nonpositive dispersion");
    const double v = variance_function(mean_family, y[i]);
    if (v <= 0.0)
      throw numeric_error("q_plus_value: variance function vanished at y = " +
                          std::to_string(y[i]));
    q += -0.5 * (d_star[i] / phi[i] + std::log(2.0 * kPi * phi[i] * v));
  }
  return q;
}

JointFit fit_joint(const Eigen::MatrixXd& X,
                   const std::vector<std::string>& x_names,
                   const Eigen::MatrixXd& U,
                   const std::vector<std::string>& u_names,
                   const Eigen::VectorXd& y, const JointConfig& cfg) {
  const Eigen::Index n = y.size();
  if (X.rows() != n || U.rows() != n)
    throw data_error("fit_joint: design row counts do not match the response");

  JointFit out;
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(n);
  double q_prev = std::numeric_limits<double>::quiet_NaN();

  for (int it = 1; it <= cfg.max_joint_iter; ++it) {
    const Eigen::VectorXd mean_w = phi.cwiseInverse();
    out.mean = irls_fit(cfg.mean_family, cfg.mean_link, X, y, mean_w, x_names,
                        cfg.irls);
    out.d_star = standardized_deviance(out.mean.dev_comp, out.mean.hat);

    out.dispersion = irls_fit(Family::gamma, cfg.disp_link, U, out.d_star,
                              Eigen::VectorXd::Ones(n), u_names, cfg.irls, 2.0);
    phi = out.dispersion.mu;

    const double q = q_plus_value(cfg.mean_family, y, out.d_star, phi);
    out.q_history.push_back(q);
    out.iterations = it;
    if (it > 1 && std::abs(q - q_prev) < cfg.q_tol) {
      out.converged = true;
      q_prev = q;
      break;
    }
    q_prev = q;
  }

  out.phi = phi;
  out.q_plus = q_prev;
  if (!out.converged)
    throw numeric_error("fit_joint: extended quasi-likelihood did not "
                        "stabilize in " + std::to_string(cfg.max_joint_iter) +
                        " alternations");
  return out;
}

double eaic(double q_plus, int kappa, int n) {
  if (n - kappa - 1 <= 0)
    throw numeric_error("eaic: need n > kappa + 1");
  return -2.0 * q_plus +
         2.0 * kappa * static_cast<double>(n) / (n - kappa - 1.0);
}

double aicc_dispersion(const Eigen::VectorXd& d_star,
                       const Eigen::VectorXd& phi,
                       const Eigen::VectorXd& mean_hat, int q, int n) {
  if (d_star.size() != phi.size() || d_star.size() != mean_hat.size())
    throw numeric_error("aicc_dispersion: length mismatch");
  if (n - q - 1 <= 0) throw numeric_error("aicc_dispersion: need n > q + 1");
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < d_star.size(); ++i) {
    const double shape = (1.0 - mean_hat[i]) / 4.0;
    loglik += gamma_log_density(d_star[i], shape, phi[i]);
  }
  return -2.0 * loglik + 2.0 * q * static_cast<double>(n) / (n - q - 1.0);
}

double mean_metric(Family mean_family, double phi, double a, double b) {
  switch (mean_family) {
    case Family::normal: {
      // V' = 0, so the curve is flat and the arc length is |b - a|.
      const double r = b - a;
      return r * r;
    }
    case Family::gamma: {
      if (phi <= 0.0)
        throw numeric_error("mean_metric: gamma family needs phi > 0");
      // integrand sqrt(1 + 4 phi^2 t^2); substitute u = 2 phi t.
      auto anti = [phi](double t) {
        const double u = 2.0 * phi * t;
        return (u * std::sqrt(1.0 + u * u) + std::asinh(u)) / (4.0 * phi);
      };
      const double len = anti(b) - anti(a);
      return len * len;
    }
  }
  throw numeric_error("mean_metric: unknown family");
}

double disp_metric(double a, double b) {
  auto anti = [](double t) {
    return t * std::sqrt(1.0 + 4.0 * t * t) / 2.0 + std::asinh(2.0 * t) / 4.0;
  };
  const double len = anti(b) - anti(a);
  return len * len;
}

double penalty_lambda(Penalty pen, int n) {
  switch (pen) {
    case Penalty::one:
      return 1.0;
    case Penalty::sqrt_n:
      return std::sqrt(static_cast<double>(n));
    case Penalty::log_n:
      return std::log(static_cast<double>(n));
  }
  throw numeric_error("unknown penalty");
}

std::string penalty_name(Penalty pen) {
  switch (pen) {
    case Penalty::one:
      return "1";
    case Penalty::sqrt_n:
      return "sqrt_n";
    case Penalty::log_n:
      return "log_n";
  }
  return "?";
}

Penalty parse_penalty(const std::string& name) {
  if (name == "1" || name == "one") return Penalty::one;
  if (name == "sqrt_n" || name == "sqrt") return Penalty::sqrt_n;
  if (name == "log_n" || name == "log") return Penalty::log_n;
  throw usage_error("unknown penalty '" + name +
                    "' (expected 1, sqrt_n or log_n)");
}

double r2_tilde_mean(const GlmFit& mean_fit, const Eigen::VectorXd& phi,
                     Penalty pen) {
  const Eigen::Index n = mean_fit.y.size();
  if (phi.size() != n) throw numeric_error("r2_tilde_mean: length mismatch");
  if (n < 2) throw numeric_error("r2_tilde_mean: need at least 2 rows");
  const Eigen::VectorXd& y = mean_fit.y;
  const Eigen::VectorXd& mu = mean_fit.mu;

  // Null-model fit under the same weights: the weighted mean when the model
  // carries a constant column, otherwise the inverse link at eta = 0.
  bool has_constant = false;
  for (const std::string& name : mean_fit.col_names)
    if (name == "1") has_constant = true;
  double bench;
  if (has_constant) {
    double wsum = 0.0, wy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      wsum += 1.0 / phi[i];
      wy += y[i] / phi[i];
    }
    bench = wy / wsum;
  } else {
    bench = mean_fit.link == Link::log_link ? 1.0 : 0.0;
  }

  double model_sum = 0.0, null_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = 1.0 / phi[i];
    model_sum += w * mean_metric(mean_fit.family, phi[i], y[i], mu[i]);
    null_sum += w * mean_metric(mean_fit.family, phi[i], y[i], bench);
  }
  if (null_sum <= 0.0)
    throw numeric_error("r2_tilde_mean: response equals the null fit");

  const int p = mean_fit.p();
  const double denom = n - penalty_lambda(pen, static_cast<int>(n)) * p;
  if (denom <= 0.0) return -std::numeric_limits<double>::infinity();
  return 1.0 - (model_sum / denom) / (null_sum / (n - 1.0));
}

double r2_tilde_disp(const GlmFit& disp_fit, Penalty pen) {
  const Eigen::Index n = disp_fit.y.size();
  if (n < 2) throw numeric_error("r2_tilde_disp: need at least 2 rows");
  const Eigen::VectorXd& d_star = disp_fit.y;
  const Eigen::VectorXd& phi_fit = disp_fit.mu;
  const double dbar = d_star.mean();

  double model_sum = 0.0, null_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rm = d_star[i] - phi_fit[i];
    const double rn = d_star[i] - dbar;
    model_sum += rm * rm;
    null_sum += rn * rn;
  }
  if (null_sum <= 0.0)
    throw numeric_error("r2_tilde_disp: constant standardized deviance");

  const int q = disp_fit.p();
  const double denom = n - penalty_lambda(pen, static_cast<int>(n)) * q;
  if (denom <= 0.0) return -std::numeric_limits<double>::infinity();
  return 1.0 - (model_sum / denom) / (null_sum / (n - 1.0));
}

TestResult f_test(double dstar_small, double dstar_big, int p_small, int p_big,
                  int n) {
  if (p_big <= p_small)
    throw numeric_error("f_test: the larger model must add terms");
  if (n - p_big <= 0)
    throw numeric_error("f_test: no residual degrees of freedom");
  TestResult r;
  r.df1 = p_big - p_small;
  r.df2 = n - p_big;
  r.stat = ((dstar_small - dstar_big) / r.df1) / (dstar_big / r.df2);
  // A nested model cannot lower the weighted deviance below the larger one
  // in exact arithmetic, but rounding can push the statistic a hair under 0.
  if (r.stat < 0.0) r.stat = 0.0;
  r.p = f_upper_p(r.stat, r.df1, r.df2);
  return r;
}

TestResult chisq_test(double dev_small, double dev_big, int p_small,
                      int p_big, double fixed_dispersion) {
  if (p_big <= p_small)
    throw numeric_error("chisq_test: the larger model must add terms");
  if (fixed_dispersion <= 0.0)
    throw numeric_error("chisq_test: fixed dispersion must be positive");
  TestResult r;
  r.df1 = p_big - p_small;
  r.df2 = 0.0;
  r.stat = (dev_small - dev_big) / fixed_dispersion;
  if (r.stat < 0.0) r.stat = 0.0;
  r.p = chisq_upper_p(r.stat, r.df1);
  return r;
}

}  // namespace meandisp

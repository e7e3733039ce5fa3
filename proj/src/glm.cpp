#include "meandisp/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "meandisp/errors.hpp"
#include "meandisp/prob.hpp"

namespace meandisp {

namespace {

constexpr double kHatCap = 1.0 - 1e-8;
constexpr double kRankTol = 1e-10;

double link_eval(Link l, double mu) {
  switch (l) {
    case Link::identity:
      return mu;
    case Link::log_link:
      if (mu <= 0.0) throw numeric_error("log link requires a positive mean");
      return std::log(mu);
  }
  throw numeric_error("unknown link");
}

double link_inverse(Link l, double eta) {
  switch (l) {
    case Link::identity:
      return eta;
    case Link::log_link:
      return std::exp(eta);
  }
  throw numeric_error("unknown link");
}

// dmu/deta as a function of mu (both links make this convenient).
double mu_eta(Link l, double mu) {
  switch (l) {
    case Link::identity:
      return 1.0;
    case Link::log_link:
      return mu;
  }
  throw numeric_error("unknown link");
}

bool mu_valid(Family f, double mu) {
  if (!std::isfinite(mu)) return false;
  if (f == Family::gamma && mu <= 0.0) return false;
  return true;
}

Eigen::VectorXd initial_mu(Family f, const Eigen::VectorXd& y) {
  if (f == Family::normal) return y;
  // Gamma: keep the start away from zero so the log link stays finite.
  const double ybar = y.mean();
  Eigen::VectorXd mu0 = y;
  for (Eigen::Index i = 0; i < mu0.size(); ++i)
    mu0[i] = std::max(mu0[i], 0.1 * ybar);
  return mu0;
}

}  // namespace

Family parse_family(const std::string& name) {
  if (name == "normal" || name == "gaussian") return Family::normal;
  if (name == "gamma") return Family::gamma;
  throw usage_error("unknown family '" + name + "' (expected normal or gamma)");
}

Link parse_link(const std::string& name) {
  if (name == "identity") return Link::identity;
  if (name == "log") return Link::log_link;
  throw usage_error("unknown link '" + name + "' (expected identity or log)");
}

std::string family_name(Family f) {
  return f == Family::normal ? "normal" : "gamma";
}

std::string link_name(Link l) {
  return l == Link::identity ? "identity" : "log";
}

double variance_function(Family f, double mu) {
  switch (f) {
    case Family::normal:
      return 1.0;
    case Family::gamma:
      return mu * mu;
  }
  throw numeric_error("unknown family");
}

double deviance_component(Family f, double y, double mu) {
  switch (f) {
    case Family::normal: {
      const double r = y - mu;
      return r * r;
    }
    case Family::gamma: {
      if (y <= 0.0)
        throw data_error("gamma deviance requires a positive response, got " +
                         std::to_string(y));
      if (mu <= 0.0)
        throw numeric_error("gamma deviance requires a positive mean");
      return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
    }
  }
  throw numeric_error("unknown family");
}

double GlmFit::scale_estimate() const {
  if (fixed_dispersion > 0.0) return fixed_dispersion;
  const int dof = n() - p();
  if (dof <= 0)
    throw numeric_error("cannot estimate a dispersion scale with no residual "
                        "degrees of freedom");
  return deviance / dof;
}

double GlmFit::pearson_scale() const {
  const int dof = n() - p();
  if (dof <= 0)
    throw numeric_error("cannot estimate a dispersion scale with no residual "
                        "degrees of freedom");
  double x2 = 0.0;
  for (int i = 0; i < n(); ++i) {
    const double r = y[i] - mu[i];
    x2 += prior_w[i] * r * r / variance_function(family, mu[i]);
  }
  return x2 / dof;
}

WlsSolution wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                      const Eigen::VectorXd& w,
                      const std::vector<std::string>& col_names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (z.size() != n || w.size() != n)
    throw numeric_error("wls_solve: response/weight length mismatch");
  if (p == 0 || n < p)
    throw numeric_error("wls_solve: need at least as many rows as columns");
  if ((w.array() < 0.0).any())
    throw numeric_error("wls_solve: negative weight");
  if (w.maxCoeff() <= 0.0)
    throw numeric_error("wls_solve: all weights are zero");

  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  const Eigen::VectorXd zw = sw.cwiseProduct(z);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  const Eigen::MatrixXd& R = qr.matrixR();
  const double r00 = std::abs(R(0, 0));
  for (Eigen::Index k = 0; k < p; ++k) {
    if (std::abs(R(k, k)) <= kRankTol * r00) {
      const Eigen::Index orig = qr.colsPermutation().indices()(k);
      const std::string name = orig < static_cast<Eigen::Index>(col_names.size())
                                   ? col_names[static_cast<size_t>(orig)]
                                   : "column " + std::to_string(orig);
      throw numeric_error("design matrix is singular: '" + name +
                          "' is collinear with earlier terms");
    }
  }

  WlsSolution sol;
  sol.beta = qr.solve(zw);

  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  sol.hat.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    sol.hat[i] = std::min(std::max(Q.row(i).squaredNorm(), 0.0), kHatCap);

  const Eigen::MatrixXd Rinv =
      R.topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(
          Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  sol.cov_unscaled =
      qr.colsPermutation() * inner * qr.colsPermutation().transpose();
  return sol;
}

GlmFit irls_fit(Family family, Link link, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, const Eigen::VectorXd& prior_w,
                const std::vector<std::string>& col_names,
                const IrlsOptions& opts, double fixed_dispersion) {
  const Eigen::Index n = X.rows();
  if (y.size() != n)
    throw data_error("irls_fit: response length does not match design rows");
  if (prior_w.size() != n)
    throw data_error("irls_fit: prior weight length does not match design rows");
  if ((prior_w.array() < 0.0).any())
    throw data_error("irls_fit: negative prior weight");
  if (family == Family::gamma) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (y[i] <= 0.0)
        throw data_error("gamma family requires positive responses; row " +
                         std::to_string(i + 1) + " has " + std::to_string(y[i]));
  }

  GlmFit fit;
  fit.family = family;
  fit.link = link;
  fit.fixed_dispersion = fixed_dispersion;
  fit.col_names = col_names;
  fit.y = y;
  fit.prior_w = prior_w;

  Eigen::VectorXd mu = initial_mu(family, y);
  Eigen::VectorXd eta(n);
  for (Eigen::Index i = 0; i < n; ++i) eta[i] = link_eval(link, mu[i]);

  auto weighted_deviance = [&](const Eigen::VectorXd& m) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      dev += prior_w[i] * deviance_component(family, y[i], m[i]);
    return dev;
  };

  double dev = weighted_deviance(mu);
  WlsSolution sol;
  Eigen::VectorXd work_w(n);

  bool converged = false;
  int iter = 0;
  while (iter < opts.max_iter) {
    ++iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = mu_eta(link, mu[i]);
      work_w[i] = prior_w[i] * g * g / variance_function(family, mu[i]);
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
      z[i] = eta[i] + (y[i] - mu[i]) / mu_eta(link, mu[i]);

    sol = wls_solve(X, z, work_w, col_names);

    // Step halving keeps the mean inside the family domain (the log link can
    // overflow, and a gamma mean must stay positive).
    Eigen::VectorXd eta_new = X * sol.beta;
    Eigen::VectorXd mu_new(n);
    double step = 1.0;
    for (int half = 0; half <= 30; ++half) {
      bool ok = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        mu_new[i] = link_inverse(link, eta_new[i]);
        if (!mu_valid(family, mu_new[i])) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      if (half == 30)
        throw numeric_error("irls_fit: could not keep the fitted mean inside "
                            "the family domain");
      step *= 0.5;
      eta_new = eta + step * (Eigen::VectorXd(X * sol.beta) - eta);
    }

    const double dev_new = weighted_deviance(mu_new);
    eta = eta_new;
    mu = mu_new;
    const double change = std::abs(dev_new - dev);
    dev = dev_new;
    if (change <= opts.rel_tol * std::abs(dev_new) + opts.abs_tol) {
      converged = true;
      break;
    }
  }

  // Refresh the least-squares pieces at the converged mean so the hat values
  // and covariance match the reported coefficients.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = mu_eta(link, mu[i]);
    work_w[i] = prior_w[i] * g * g / variance_function(family, mu[i]);
  }
  {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
      z[i] = eta[i] + (y[i] - mu[i]) / mu_eta(link, mu[i]);
    sol = wls_solve(X, z, work_w, col_names);
    eta = X * sol.beta;
    bool ok = true;
    Eigen::VectorXd mu_final(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu_final[i] = link_inverse(link, eta[i]);
      if (!mu_valid(family, mu_final[i])) ok = false;
    }
    if (ok) {
      mu = mu_final;
      dev = weighted_deviance(mu);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) eta[i] = link_eval(link, mu[i]);
    }
  }

  fit.beta = sol.beta;
  fit.eta = eta;
  fit.mu = mu;
  fit.hat = sol.hat;
  fit.working_w = work_w;
  fit.cov_unscaled = sol.cov_unscaled;
  fit.dev_comp.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    fit.dev_comp[i] = deviance_component(family, y[i], mu[i]);
  fit.deviance = dev;
  fit.iterations = iter;
  fit.converged = converged;
  if (!converged)
    throw numeric_error("irls_fit: no convergence in " +
                        std::to_string(opts.max_iter) + " iterations");
  return fit;
}

std::vector<WaldRow> wald_table(const GlmFit& fit, double dispersion_scale) {
  if (dispersion_scale <= 0.0)
    throw numeric_error("wald_table: dispersion scale must be positive");
  const int dof = fit.n() - fit.p();
  if (dof <= 0)
    throw numeric_error("wald_table: no residual degrees of freedom");
  std::vector<WaldRow> rows;
  rows.reserve(static_cast<size_t>(fit.p()));
  for (int j = 0; j < fit.p(); ++j) {
    WaldRow row;
    row.term = j < static_cast<int>(fit.col_names.size())
                   ? fit.col_names[static_cast<size_t>(j)]
                   : "b" + std::to_string(j);
    row.estimate = fit.beta[j];
    row.se = std::sqrt(dispersion_scale * fit.cov_unscaled(j, j));
    row.t = row.estimate / row.se;
    row.p = t_two_sided_p(row.t, dof);
    rows.push_back(row);
  }
  return rows;
}

std::vector<DiagnosticsRow> diagnostics(const GlmFit& fit) {
  const double scale = fit.scale_estimate();
  const int n = fit.n();
  const int p = fit.p();
  std::vector<DiagnosticsRow> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    DiagnosticsRow row;
    row.fitted = fit.mu[i];
    const double sign = fit.y[i] >= fit.mu[i] ? 1.0 : -1.0;
    row.dev_res = sign * std::sqrt(std::max(fit.dev_comp[i], 0.0));
    const double h = fit.hat[i];
    row.leverage = h;
    // An exactly interpolating fit has zero estimated scale; its residuals
    // are zero, not 0/0.
    const double num = fit.prior_w[i] * fit.dev_comp[i];
    row.std_dev_res =
        num <= 0.0 ? 0.0 : sign * std::sqrt(num / (scale * (1.0 - h)));
    row.cooks = row.std_dev_res * row.std_dev_res * h /
                (static_cast<double>(p) * (1.0 - h));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace meandisp

#ifndef MEANDISP_PROB_HPP
#define MEANDISP_PROB_HPP

namespace meandisp {

// Regularized incomplete gamma and beta functions, computed with the classic
// series/continued-fraction pairs (Lentz's method). Absolute accuracy is
// driven well below 1e-10 so the distribution tails derived from them are
// dependable in tests.

// P(a, x) = gamma(a, x) / Gamma(a), lower regularized incomplete gamma.
double reg_gamma_lower(double a, double x);

// Q(a, x) = 1 - P(a, x), upper regularized incomplete gamma.
double reg_gamma_upper(double a, double x);

// I_x(a, b), regularized incomplete beta.
double reg_beta(double a, double b, double x);

// Upper-tail probabilities of the usual test statistics.
double chisq_upper_p(double x, double df);
double f_upper_p(double f, double df1, double df2);

// Two-sided p-value for a t statistic with df degrees of freedom.
double t_two_sided_p(double t, double df);

// Standard normal quantile (Wichura's AS 241 rational approximations),
// accurate to roughly 1e-15 over (0, 1).
double normal_quantile(double p);

}  // namespace meandisp

#endif

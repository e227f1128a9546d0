#pragma once

namespace ragmat::stats {

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction,
/// using the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) for fast convergence.
double incomplete_beta(double a, double b, double x);

/// P(F > f) for F ~ F(d1, d2).
double f_upper_tail(double f, double d1, double d2);

/// P(F <= f).
double f_cdf(double f, double d1, double d2);

/// Quantile of F(d1, d2), found by bracketing and bisection on f_cdf.
double f_quantile(double p, double d1, double d2);

/// Two-sided p-value P(|T| >= |t|) for Student's t with df degrees of freedom.
double t_two_sided(double t, double df);

}  // namespace ragmat::stats

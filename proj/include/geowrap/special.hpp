#pragma once

namespace geowrap::special {

// log I_0(x) for x >= 0: power series for x <= 15, scaled asymptotic
// expansion above. Relative error below 1e-10 on the whole range.
double log_bessel_i0(double x);

// Regularised lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// log of the multivariate gamma function Gamma_p(a).
double log_multivariate_gamma(int p, double a);

// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

}  // namespace geowrap::special

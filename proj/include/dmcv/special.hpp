#pragma once

namespace dmcv {

// Upper incomplete gamma Gamma(s,x) = \int_x^inf t^{s-1} e^{-t} dt.
// Overflows to +inf for s large enough that Gamma(s) exceeds double range;
// callers needing ratios at large s use regularized_gamma_q instead.
// Throws std::domain_error for s <= 0.
double upper_incomplete_gamma(double s, double x);

// Q(s,x) = Gamma(s,x) / Gamma(s), stable for all s > 0 representable in double.
double regularized_gamma_q(double s, double x);

double log_gamma(double s);
double log_factorial(int n);
double log_binomial(int n, int k);

// Generalized Laguerre polynomial L_k^{(a)}(x), integer a >= 0.
double generalized_laguerre(int k, int a, double x);

// log of L_k^{(a)}(-t) for t >= 0 (all series terms positive, never overflows).
double log_laguerre_at_negative(int k, int a, double t);

} // namespace dmcv

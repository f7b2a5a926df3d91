#include "dmcv/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <boost/math/policies/policy.hpp>

namespace dmcv {

namespace {
using overflow_to_inf = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>>;
}

double upper_incomplete_gamma(double s, double x) {
  if (s <= 0.0) throw std::domain_error("upper_incomplete_gamma: s must be positive");
  if (x < 0.0) throw std::domain_error("upper_incomplete_gamma: x must be nonnegative");
  if (x == 0.0) return boost::math::tgamma(s, overflow_to_inf());
  return boost::math::tgamma(s, x, overflow_to_inf());
}

double regularized_gamma_q(double s, double x) {
  if (s <= 0.0) throw std::domain_error("regularized_gamma_q: s must be positive");
  if (x < 0.0) throw std::domain_error("regularized_gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(s, x);
}

double log_gamma(double s) {
  if (s <= 0.0) throw std::domain_error("log_gamma: s must be positive");
  return std::lgamma(s);
}

double log_factorial(int n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(int n, int k) {
  if (k < 0 || k > n) throw std::domain_error("log_binomial: k out of range");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double generalized_laguerre(int k, int a, double x) {
  if (k < 0 || a < 0) throw std::domain_error("generalized_laguerre: negative order");
  if (a == 0) return boost::math::laguerre(static_cast<unsigned>(k), x);
  return boost::math::laguerre(static_cast<unsigned>(k), static_cast<unsigned>(a), x);
}

double log_laguerre_at_negative(int k, int a, double t) {
  if (k < 0 || a < 0) throw std::domain_error("log_laguerre_at_negative: negative order");
  if (t < 0.0) throw std::domain_error("log_laguerre_at_negative: t must be nonnegative");
  if (t == 0.0) return log_binomial(k + a, k);
  double logt = std::log(t);
  double peak = -INFINITY;
  for (int j = 0; j <= k; ++j) {
    double lt = log_binomial(k + a, k - j) + j * logt - log_factorial(j);
    peak = std::max(peak, lt);
  }
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    double lt = log_binomial(k + a, k - j) + j * logt - log_factorial(j);
    acc += std::exp(lt - peak);
  }
  return peak + std::log(acc);
}

} // namespace dmcv

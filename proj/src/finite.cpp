#include "dmcv/finite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dmcv/special.hpp"

namespace dmcv {

double EpsilonBudget::total() const {
  validate();
  return eps_ec + std::max(0.5 * eps_pa + eps_bar, eps_et + eps_at);
}

void EpsilonBudget::validate() const {
  if (!(eps_ec > 0.0) || !(eps_pa > 0.0) || !(eps_bar > 0.0) || !(eps_at > 0.0) ||
      !(eps_et > 0.0)) {
    throw std::domain_error("EpsilonBudget: all components must be positive");
  }
}

void TestPlan::validate(double M) const {
  if (!(total_rounds >= 2.0)) throw std::domain_error("TestPlan: need at least two rounds");
  if (!(r_test > 0.0 && r_test < 1.0)) throw std::domain_error("TestPlan: r_test outside (0,1)");
  if (!(k_test >= 1.0)) throw std::domain_error("TestPlan: k_test must be at least 1");
  if (!(n_keep >= 1.0)) throw std::domain_error("TestPlan: n_keep must be at least 1");
  if (!(l_test >= 0.0 && l_test < k_test)) throw std::domain_error("TestPlan: l_test outside [0,k_test)");
  if (!(beta_test > 0.0)) throw std::domain_error("TestPlan: beta_test must be positive");
  if (M > 0.0 && beta_test > M) throw std::domain_error("TestPlan: beta_test exceeds outcome cutoff");
  if (!(t_factor >= 0.0)) throw std::domain_error("TestPlan: t_factor must be nonnegative");
  if (!(m_per_observable >= 1.0)) throw std::domain_error("TestPlan: m_per_observable must be at least 1");
}

TestPlan make_test_plan(double N, double r_test, double lt_over_kt, double beta_test,
                        double t_factor, int n_states) {
  if (!(N >= 2.0)) throw std::domain_error("make_test_plan: N too small");
  if (!(r_test > 0.0 && r_test < 1.0)) throw std::domain_error("make_test_plan: r_test outside (0,1)");
  if (!(lt_over_kt >= 0.0 && lt_over_kt < 1.0)) {
    throw std::domain_error("make_test_plan: l/k ratio outside [0,1)");
  }
  if (n_states < 1) throw std::domain_error("make_test_plan: n_states must be positive");
  TestPlan plan;
  plan.total_rounds = N;
  plan.r_test = r_test;
  plan.k_test = std::round(r_test * N);
  if (plan.k_test < 1.0) plan.k_test = 1.0;
  if (plan.k_test > N - 1.0) plan.k_test = N - 1.0;
  plan.n_keep = N - plan.k_test;
  // The nudge keeps round-number products such as 1e-8 * 2e8 from ceiling up
  // one extra count.
  plan.l_test = std::ceil(lt_over_kt * plan.k_test - 1e-9);
  if (plan.l_test < 0.0) plan.l_test = 0.0;
  plan.beta_test = beta_test;
  plan.m_per_observable = plan.k_test / static_cast<double>(n_states);
  plan.t_factor = t_factor;
  return plan;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double binary_kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_kl: p outside [0,1]");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("binary_kl: q outside (0,1)");
  double d = 0.0;
  if (p > 0.0) d += p * std::log2(p / q);
  if (p < 1.0) d += (1.0 - p) * std::log2((1.0 - p) / (1.0 - q));
  return d;
}

double r_factor(int n_c, double beta_test, const ProtocolParams& detector, GammaConvention conv) {
  if (n_c < 0) throw std::domain_error("r_factor: negative cutoff");
  if (!(beta_test > 0.0)) throw std::domain_error("r_factor: beta_test must be positive");
  const double arg = (conv == GammaConvention::squared) ? beta_test * beta_test : beta_test;
  double a = 1.0;
  if (detector.trusted) {
    const double nbar_d = detector.detector_thermal_occupation();
    a = 1.0 / (detector.eta_d * (1.0 + nbar_d));
  }
  const double q = regularized_gamma_q(static_cast<double>(n_c) + 1.0, a * arg);
  if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / q;
}

double energy_test_log2_epsilon(double k_test, double l_test, double w, double r) {
  if (!(k_test >= 1.0)) throw std::domain_error("energy_test: k_test must be at least 1");
  if (!(l_test >= 0.0 && l_test < k_test)) throw std::domain_error("energy_test: l_test outside [0,k_test)");
  if (!(w > 0.0 && w <= 1.0)) throw std::domain_error("energy_test: w outside (0,1]");
  if (!(r > 0.0)) throw std::domain_error("energy_test: r must be positive");
  const double q = w / r;
  if (!(q < 1.0)) throw std::domain_error("energy_test: w/r must be below 1");
  const double p = l_test / k_test;
  if (!(p < q)) throw std::domain_error("energy_test: need l_test/k_test < w/r");
  return std::log2(l_test + 1.0) - k_test * binary_kl(p, q);
}

double energy_test_epsilon(double k_test, double l_test, double w, double r) {
  return std::exp2(energy_test_log2_epsilon(k_test, l_test, w, r));
}

WeightSolution weight_from_epsilon(double eps_target, double k_test, double l_test, double r) {
  if (!(eps_target > 0.0 && eps_target < 1.0)) {
    throw std::domain_error("weight_from_epsilon: target outside (0,1)");
  }
  if (!(k_test >= 1.0)) throw std::domain_error("weight_from_epsilon: k_test must be at least 1");
  if (!(l_test >= 0.0 && l_test < k_test)) {
    throw std::domain_error("weight_from_epsilon: l_test outside [0,k_test)");
  }
  if (!(r > 0.0)) throw std::domain_error("weight_from_epsilon: r must be positive");

  const double log2_target = std::log2(eps_target);
  double lo = r * l_test / k_test;
  double hi = std::min(1.0, r * (1.0 - 1e-12));
  WeightSolution out;
  if (!(lo < hi) || energy_test_log2_epsilon(k_test, l_test, hi, r) > log2_target) {
    out.w = hi;
    out.saturated = true;
    return out;
  }
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-9 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (energy_test_log2_epsilon(k_test, l_test, mid, r) <= log2_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.w = hi;
  out.saturated = false;
  return out;
}

double choose_weight(double w_exp, double w_eps, double w_min) {
  for (double w : {w_exp, w_eps, w_min}) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("choose_weight: weight outside [0,1]");
  }
  return std::max({w_exp, w_eps, w_min});
}

double acceptance_mu(double x_cap, double m_tests, double eps_at, bool psd) {
  if (!(x_cap >= 0.0)) throw std::domain_error("acceptance_mu: negative bound");
  if (!(m_tests >= 1.0)) throw std::domain_error("acceptance_mu: need at least one test");
  if (!(eps_at > 0.0 && eps_at <= 2.0)) throw std::domain_error("acceptance_mu: eps_at outside (0,2]");
  const double scale = psd ? x_cap * x_cap / (2.0 * m_tests) : 2.0 * x_cap * x_cap / m_tests;
  return std::sqrt(scale * std::log(2.0 / eps_at));
}

std::vector<std::pair<double, double>> acceptance_set(const std::vector<double>& gamma,
                                                      const std::vector<double>& mu,
                                                      const std::vector<double>& t) {
  if (gamma.size() != mu.size() || gamma.size() != t.size()) {
    throw std::invalid_argument("acceptance_set: mismatched lengths");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!(mu[i] >= 0.0) || !(t[i] >= 0.0)) {
      throw std::domain_error("acceptance_set: radii must be nonnegative");
    }
    out.emplace_back(gamma[i] - mu[i] - t[i], gamma[i] + mu[i] + t[i]);
  }
  return out;
}

double delta_w(double w, int alphabet_size) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("delta_w: w outside [0,1]");
  if (alphabet_size < 2) throw std::domain_error("delta_w: alphabet too small");
  if (w == 0.0) return 0.0;
  const double sw = std::sqrt(w);
  return sw * std::log2(static_cast<double>(alphabet_size)) +
         (1.0 + sw) * binary_entropy(sw / (1.0 + sw));
}

double delta_aep(double eps_bar, double n_rounds, int rank_x) {
  if (!(eps_bar > 0.0 && eps_bar <= 2.0)) throw std::domain_error("delta_aep: eps_bar outside (0,2]");
  if (!(n_rounds >= 1.0)) throw std::domain_error("delta_aep: n_rounds must be at least 1");
  if (rank_x < 1) throw std::domain_error("delta_aep: rank must be positive");
  return 2.0 * std::log2(static_cast<double>(rank_x) + 3.0) *
         std::sqrt(std::log2(2.0 / eps_bar) / n_rounds);
}

CompletenessBounds completeness_bounds(const TestPlan& plan, double v1_expect,
                                       const std::vector<double>& mu,
                                       const std::vector<double>& caps,
                                       const std::vector<double>& m_tests, double eps_c_ec) {
  if (mu.size() != caps.size() || mu.size() != m_tests.size()) {
    throw std::invalid_argument("completeness_bounds: mismatched lengths");
  }
  if (!(eps_c_ec >= 0.0)) throw std::domain_error("completeness_bounds: negative eps_c_ec");
  if (!(v1_expect >= 0.0 && v1_expect <= 1.0)) {
    throw std::domain_error("completeness_bounds: v1_expect outside [0,1]");
  }

  CompletenessBounds out;
  const double p1 = (plan.l_test + 1.0) / plan.k_test;
  if (!(v1_expect < p1) || v1_expect >= 1.0) {
    out.always_aborts = true;
    return out;
  }
  out.always_aborts = false;

  if (v1_expect <= 0.0) {
    out.eps_c_et = 0.0;
  } else {
    const double prefactor = std::max(0.0, plan.k_test - plan.l_test - 1.0);
    if (prefactor == 0.0) {
      out.eps_c_et = 0.0;
    } else {
      const double log2_et = std::log2(prefactor) - plan.k_test * binary_kl(p1, v1_expect);
      out.eps_c_et = std::min(1.0, std::exp2(log2_et));
    }
  }

  double at = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(caps[i] > 0.0)) throw std::domain_error("completeness_bounds: bound must be positive");
    if (!(m_tests[i] >= 1.0)) throw std::domain_error("completeness_bounds: need at least one test");
    const double t = plan.t_factor * mu[i];
    at += 2.0 * std::exp(-2.0 * m_tests[i] * t * t / (4.0 * caps[i] * caps[i]));
  }
  out.eps_c_at = at;
  out.nu_c = std::min(1.0, out.eps_c_et + out.eps_c_at + eps_c_ec);
  return out;
}

KeyLengthResult key_length_per_round(double h_min_bits, const TestPlan& plan,
                                     const EpsilonBudget& budget, double w, double leak_per_use,
                                     double nu_c, int alphabet_size) {
  budget.validate();
  if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("key_length_per_round: w outside [0,1]");
  if (!(nu_c >= 0.0 && nu_c <= 1.0)) throw std::domain_error("key_length_per_round: nu_c outside [0,1]");
  if (!(leak_per_use >= 0.0)) throw std::domain_error("key_length_per_round: negative leakage");
  const double n = plan.n_keep;
  const double N = plan.total_rounds;
  const double daep = delta_aep(budget.eps_bar, n, alphabet_size);
  const double dw = delta_w(w, alphabet_size);
  KeyLengthResult out;
  out.raw = (n / N) * (h_min_bits - daep - dw) - leak_per_use -
            (2.0 / N) * std::log2(1.0 / budget.eps_pa);
  out.secure = std::max(0.0, out.raw);
  out.expected = (1.0 - nu_c) * out.secure;
  return out;
}

} // namespace dmcv

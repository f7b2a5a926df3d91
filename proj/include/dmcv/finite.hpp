#pragma once

#include <utility>
#include <vector>

#include "dmcv/protocol.hpp"

namespace dmcv {

// Incomplete-gamma argument convention for the tail ratio; squared is the
// default, literal keeps the unsquared radius for comparison runs.
enum class GammaConvention { squared, literal };

struct EpsilonBudget {
  double eps_ec = 0.2e-10;
  double eps_pa = 0.2e-10;
  double eps_bar = 0.7e-10;
  double eps_at = 0.7e-10;
  double eps_et = 0.1e-10;

  double total() const;
  void validate() const;
};

struct TestPlan {
  double total_rounds = 0.0;      // N
  double r_test = 0.0;
  double k_test = 0.0;            // rounds spent on testing
  double n_keep = 0.0;            // rounds kept for key generation
  double l_test = 0.0;            // tolerated test-round exceedances
  double beta_test = 0.0;
  double m_per_observable = 0.0;  // uniform-prior default, k_test / n_states
  double t_factor = 0.0;

  void validate(double M) const;
};
TestPlan make_test_plan(double N, double r_test, double lt_over_kt, double beta_test,
                        double t_factor, int n_states = 4);

double binary_entropy(double p);

// Divergence between Bernoulli(p) and Bernoulli(q), in bits.
double binary_kl(double p, double q);

// Tail ratio relating the cutoff-space weight to the test-round exceedance
// probability.
double r_factor(int n_c, double beta_test, const ProtocolParams& detector,
                GammaConvention conv = GammaConvention::squared);

// Failure bound for the energy test: probability that a state with weight w
// beyond the cutoff shows at most l_test exceedances in k_test rounds.
double energy_test_log2_epsilon(double k_test, double l_test, double w, double r);
double energy_test_epsilon(double k_test, double l_test, double w, double r);

struct WeightSolution {
  double w = 1.0;
  bool saturated = false;  // no weight in range reaches the target
};
WeightSolution weight_from_epsilon(double eps_target, double k_test, double l_test, double r);

double choose_weight(double w_exp, double w_eps, double w_min);

// Concentration radius for one observable with m_tests samples bounded by
// x_cap; psd selects the one-sided-range variant.
double acceptance_mu(double x_cap, double m_tests, double eps_at, bool psd);

std::vector<std::pair<double, double>> acceptance_set(const std::vector<double>& gamma,
                                                      const std::vector<double>& mu,
                                                      const std::vector<double>& t);

// Key-rate penalty for the weight left outside the cutoff space.
double delta_w(double w, int alphabet_size);

// Finite-n entropy-accumulation correction.
double delta_aep(double eps_bar, double n_rounds, int rank_x);

struct CompletenessBounds {
  double eps_c_et = 1.0;
  double eps_c_at = 1.0;
  double nu_c = 1.0;
  bool always_aborts = false;
};
// Honest abort-probability bounds; mu, caps, and m_tests are aligned over the
// tested observables.
CompletenessBounds completeness_bounds(const TestPlan& plan, double v1_expect,
                                       const std::vector<double>& mu,
                                       const std::vector<double>& caps,
                                       const std::vector<double>& m_tests, double eps_c_ec);

struct KeyLengthResult {
  double raw = 0.0;       // signed rate per channel use
  double secure = 0.0;    // clamped at zero
  double expected = 0.0;  // (1 - nu_c) * secure
};
// leak_per_use is the error-correction cost already scaled to one channel use.
KeyLengthResult key_length_per_round(double h_min_bits, const TestPlan& plan,
                                     const EpsilonBudget& budget, double w, double leak_per_use,
                                     double nu_c, int alphabet_size);

} // namespace dmcv

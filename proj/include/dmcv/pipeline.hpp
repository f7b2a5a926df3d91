#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dmcv/config.hpp"

namespace dmcv {

// One evaluated scenario point: the resolved inputs plus every derived
// quantity that the CSV schema persists.
struct KeyRateReport {
  ScenarioConfig config;

  double eta = 0.0;
  double k_test = 0.0;
  double n_keep = 0.0;
  double l_test = 0.0;

  double w_exp = 0.0;
  double w_eps = 0.0;
  double w = 0.0;

  // Conditional-level acceptance radii, identical across signals for the
  // uniform prior; t = t_factor * mu.
  double mu_q1 = 0.0;
  double mu_q2 = 0.0;
  double t_q1 = 0.0;
  double t_q2 = 0.0;

  double p_pass = 0.0;
  double delta_ec = 0.0;       // reconciliation bits per key-generation round
  double leak_per_use = 0.0;   // scaled to one channel use

  double h_bound = 0.0;        // certified conditional-entropy bound, bits per use
  double primal_value = 0.0;
  double fw_gap = 0.0;
  double eps_num_slack = 0.0;
  int solver_iterations = 0;
  std::string solver_status;
  bool certified = false;      // the reported bound passed dual verification

  double eps_c_et = 1.0;
  double eps_c_at = 1.0;
  double nu_c = 1.0;

  double raw_rate = 0.0;       // signed l/N per channel use
  double secure_rate = 0.0;    // clamped at zero
  double expected_rate = 0.0;  // (1 - nu_c) * secure_rate
  double wall_time_s = 0.0;

  std::string error;           // nonempty when the point failed outright
};

// Full pipeline for one scenario: operators, honest statistics, weight
// choice, acceptance radii, constraint assembly, certified solve, key length,
// completeness. Solver failures are captured in the report, never thrown.
KeyRateReport run_point(const ScenarioConfig& cfg);

// Deterministic Cartesian expansion of the sweep axes (N, L, r_test,
// t_factor, alpha, delta_r from outer to inner); empty axes yield {cfg}.
std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& cfg);

using PointCallback =
    std::function<void(const KeyRateReport&, std::size_t index, std::size_t total)>;

// Evaluates every expanded point; the result order matches expand_sweep
// regardless of thread count, and the callback fires in that order.
std::vector<KeyRateReport> run_sweep(const ScenarioConfig& cfg, int threads = 1,
                                     const PointCallback& on_point = nullptr);

std::vector<double> default_alpha_grid();
std::vector<double> default_deltar_grid();

// Exhaustive grid search over (alpha, delta_r); ranks by expected rate, or by
// the clamped raw rate when t_factor is zero (the unique-acceptance reading,
// where the expected rate is identically zero). Ties break toward smaller
// alpha, then smaller delta_r.
KeyRateReport optimize_amplitude_postselection(const ScenarioConfig& cfg,
                                               const std::vector<double>& alpha_grid,
                                               const std::vector<double>& deltar_grid,
                                               int threads = 1,
                                               const PointCallback& on_point = nullptr);

} // namespace dmcv

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmcv/finite.hpp"

namespace dmcv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Whether statistical radii on the conditioned moment observables are scaled
// by the signal prior (the conditional test read at the full-trace level) or
// applied as printed.
enum class MuScaling { probability, plain };

// finite runs the full statistical pipeline; asymptotic evaluates the
// infinite-N limit (exact expectation constraints, all rounds kept, only the
// reconciliation cost surviving) for convergence comparisons.
enum class RunMode { finite, asymptotic };

struct SweepAxes {
  std::vector<double> total_rounds;
  std::vector<double> distance_km;
  std::vector<double> r_test;
  std::vector<double> t_factor;
  std::vector<double> alpha;
  std::vector<double> delta_r;

  bool empty() const;
  std::size_t point_count() const;
};

// One fully resolved scenario. Every field has a default, so an empty config
// file is a valid scenario; parse_config_text only overrides what is present.
struct ScenarioConfig {
  // [channel]
  double distance_km = 10.0;
  std::optional<double> eta_override;
  double xi = 0.01;

  // [protocol]
  double alpha = 0.85;
  double delta_r = 0.45;
  double range_bound = 5.0;
  int n_c = 20;
  int n_states = 4;

  // [detector]
  bool trusted = false;
  double eta_d = 1.0;
  double nu_el = 0.0;

  // [plan]
  RunMode mode = RunMode::finite;
  double total_rounds = 5e8;
  double r_test = 0.4;
  double lt_over_kt = 1e-8;
  double beta_test = 4.0;
  double t_factor = 1.110;
  double w_min = 0.0;
  MuScaling mu_scaling = MuScaling::probability;
  GammaConvention gamma_convention = GammaConvention::squared;

  // [budget]
  EpsilonBudget budget;

  // [ec]
  double beta_ec = 0.95;

  // [solver]
  double tol = 1e-6;
  int max_iter = 150;
  double eps_num = 1e-8;
  std::string backend = "internal";
  bool literal_bounds = false;

  // [sweep]
  SweepAxes sweep;

  double effective_eta() const;
  void validate() const;
};

// Flat "key = value" text with [section] headers; '#' starts a comment.
// Unknown sections or keys are hard errors.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);

// Full rendering of a resolved config, parseable by parse_config_text; used
// for the run manifest so every applied default is recorded.
std::string resolved_config_text(const ScenarioConfig& cfg);

std::string to_string(MuScaling v);
std::string to_string(RunMode v);
std::string to_string(GammaConvention v);

// Shortest decimal rendering that parses back to the same double.
std::string format_double(double v);

} // namespace dmcv

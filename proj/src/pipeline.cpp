#include "dmcv/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "dmcv/channel.hpp"
#include "dmcv/solver.hpp"

namespace dmcv {

namespace {

void select_backend(const std::string& backend) {
  const char* cur = std::getenv("DMCV_BACKEND");
  std::string current = cur ? cur : "internal";
  if (current != backend) ::setenv("DMCV_BACKEND", backend.c_str(), 1);
}

const char* status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::certified: return "certified";
    case SolverStatus::feasibility_failed: return "feasibility_failed";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

ProtocolParams protocol_from(const ScenarioConfig& cfg) {
  ProtocolParams p;
  p.n_states = cfg.n_states;
  p.amplitude = cfg.alpha;
  p.delta_r = cfg.delta_r;
  p.M = cfg.range_bound;
  p.n_c = cfg.n_c;
  p.eta_d = cfg.eta_d;
  p.nu_el = cfg.nu_el;
  p.trusted = cfg.trusted;
  return p;
}

// Rounds used for the reconciliation verification term in asymptotic mode;
// large enough that the per-use term vanishes at double precision.
constexpr double kAsymptoticRounds = 1e300;

void evaluate_point(const ScenarioConfig& cfg, KeyRateReport& rep) {
  select_backend(cfg.backend);

  ChannelModel channel = cfg.eta_override ? ChannelModel::from_eta(*cfg.eta_override, cfg.xi)
                                          : ChannelModel::from_distance(cfg.distance_km, cfg.xi);
  rep.eta = channel.eta;
  ProtocolParams p = protocol_from(cfg);
  TruncationSpec spec{cfg.n_c, 0};
  const bool asymptotic = cfg.mode == RunMode::asymptotic;

  TestPlan plan;
  if (asymptotic) {
    plan.total_rounds = cfg.total_rounds;
    plan.n_keep = cfg.total_rounds;
    plan.beta_test = cfg.beta_test;
    plan.t_factor = cfg.t_factor;
  } else {
    plan = make_test_plan(cfg.total_rounds, cfg.r_test, cfg.lt_over_kt, cfg.beta_test,
                          cfg.t_factor, cfg.n_states);
  }
  rep.k_test = plan.k_test;
  rep.n_keep = plan.n_keep;
  rep.l_test = plan.l_test;

  const double ec_rounds = asymptotic ? kAsymptoticRounds : plan.n_keep;
  HonestStatistics honest = honest_statistics(channel, p, cfg.beta_ec, ec_rounds,
                                              cfg.budget.eps_ec, cfg.beta_test);
  rep.p_pass = honest.p_pass;
  rep.delta_ec = honest.delta_ec;
  rep.w_exp = honest.w_exp;

  const double r = r_factor(cfg.n_c, cfg.beta_test, p, cfg.gamma_convention);
  if (asymptotic) {
    rep.w_eps = r * cfg.lt_over_kt;
  } else {
    WeightSolution ws = weight_from_epsilon(cfg.budget.eps_et, plan.k_test, plan.l_test, r);
    rep.w_eps = ws.w;
    if (ws.saturated) {
      rep.error = "energy test cannot certify any cutoff weight at these parameters";
      return;
    }
  }
  rep.w = choose_weight(rep.w_exp, rep.w_eps, cfg.w_min);
  if (!(rep.w < 1.0)) {
    rep.error = "cutoff weight reaches one; no constraint survives";
    return;
  }

  std::vector<cplx> centers(cfg.n_states);
  for (int i = 0; i < cfg.n_states; ++i) centers[i] = std::sqrt(channel.eta) * p.signal(i);
  std::vector<ObservableSpec> specs = observable_set(p, centers, spec);

  PostprocessingMaps maps = build_postprocessing_maps(p, spec);
  Mat anchor = honest_joint_state(channel, p, spec).entries;

  if (!asymptotic) {
    const double m = plan.m_per_observable;
    rep.mu_q1 = acceptance_mu(specs[1].expected_bound, m, cfg.budget.eps_at, true);
    rep.mu_q2 = acceptance_mu(specs[2].expected_bound, m, cfg.budget.eps_at, true);
    rep.t_q1 = plan.t_factor * rep.mu_q1;
    rep.t_q2 = plan.t_factor * rep.mu_q2;
  }

  ConstraintSet cs;
  cs.dim_a = cfg.n_states;
  cs.dim_b = spec.dim();
  cs.rho_a = rho_alice(p).entries;
  cs.weight = rep.w;
  cs.literal_bounds = cfg.literal_bounds;
  for (std::size_t j = 1; j < specs.size(); ++j) {
    const ObservableSpec& sp = specs[j];
    const bool first = sp.kind == ObservableSpec::Kind::n_first_moment;
    const double scale =
        cfg.mu_scaling == MuScaling::probability ? p.prob(sp.signal_index) : 1.0;
    MomentConstraint mc;
    mc.op = sp.op;
    mc.value = honest.gamma[j];
    if (asymptotic) {
      // Exact-expectation limit, widened by the measurable truncation
      // discrepancy of the honest state (plus a strict-feasibility floor) so
      // the cutoff-space problem stays feasible; widening relaxes the
      // feasible set, so the bound stays a valid lower bound.
      double mismatch = std::fabs((sp.op.entries * anchor).trace().real() - honest.gamma[j]);
      mc.mu = mismatch + 1e-9 * sp.expected_bound;
      mc.t = 0.0;
      if (first) rep.mu_q1 = std::max(rep.mu_q1, mc.mu);
      else rep.mu_q2 = std::max(rep.mu_q2, mc.mu);
    } else {
      mc.mu = scale * (first ? rep.mu_q1 : rep.mu_q2);
      mc.t = scale * (first ? rep.t_q1 : rep.t_q2);
    }
    mc.cap = sp.expected_bound;
    cs.observables.push_back(std::move(mc));
  }

  if (asymptotic) {
    rep.eps_c_et = 0.0;
    rep.eps_c_at = 0.0;
    rep.nu_c = 0.0;
  } else {
    std::vector<double> mu_cond, caps, m_tests;
    for (std::size_t j = 1; j < specs.size(); ++j) {
      const bool first = specs[j].kind == ObservableSpec::Kind::n_first_moment;
      mu_cond.push_back(first ? rep.mu_q1 : rep.mu_q2);
      caps.push_back(specs[j].expected_bound);
      m_tests.push_back(plan.m_per_observable);
    }
    CompletenessBounds cb = completeness_bounds(plan, honest.v1_expect, mu_cond, caps, m_tests,
                                                cfg.budget.eps_ec);
    rep.eps_c_et = cb.always_aborts ? 1.0 : cb.eps_c_et;
    rep.eps_c_at = cb.always_aborts ? 1.0 : cb.eps_c_at;
    rep.nu_c = cb.nu_c;
  }

  SolverReport sol = solve_key_rate(cs, maps, cfg.tol, cfg.max_iter, cfg.eps_num, &anchor);
  rep.h_bound = sol.certified_lower_bound;
  rep.primal_value = sol.primal_value;
  rep.fw_gap = sol.frank_wolfe_gap;
  rep.eps_num_slack = sol.eps_num_slack;
  rep.solver_iterations = sol.iterations;
  rep.solver_status = status_name(sol.status);
  rep.certified =
      sol.status == SolverStatus::certified || sol.status == SolverStatus::max_iter;
  if (!rep.certified) {
    rep.raw_rate = 0.0;
    rep.secure_rate = 0.0;
    rep.expected_rate = 0.0;
    return;
  }

  if (asymptotic) {
    rep.leak_per_use = honest.delta_ec;
    rep.raw_rate = rep.h_bound - delta_w(rep.w, cfg.n_states) - rep.leak_per_use;
    rep.secure_rate = std::max(0.0, rep.raw_rate);
    rep.expected_rate = rep.secure_rate;
  } else {
    rep.leak_per_use = (plan.n_keep / plan.total_rounds) * honest.delta_ec;
    KeyLengthResult kl = key_length_per_round(rep.h_bound, plan, cfg.budget, rep.w,
                                              rep.leak_per_use, rep.nu_c, cfg.n_states);
    rep.raw_rate = kl.raw;
    rep.secure_rate = kl.secure;
    rep.expected_rate = kl.expected;
  }
}

} // namespace

KeyRateReport run_point(const ScenarioConfig& cfg) {
  cfg.validate();
  KeyRateReport rep;
  rep.config = cfg;
  rep.config.sweep = SweepAxes{};
  auto start = std::chrono::steady_clock::now();
  try {
    evaluate_point(rep.config, rep);
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.raw_rate = 0.0;
    rep.secure_rate = 0.0;
    rep.expected_rate = 0.0;
  }
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& cfg) {
  const SweepAxes& ax = cfg.sweep;
  auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  std::vector<double> ns = axis(ax.total_rounds, cfg.total_rounds);
  std::vector<double> ls = axis(ax.distance_km, cfg.distance_km);
  std::vector<double> rs = axis(ax.r_test, cfg.r_test);
  std::vector<double> ts = axis(ax.t_factor, cfg.t_factor);
  std::vector<double> as = axis(ax.alpha, cfg.alpha);
  std::vector<double> ds = axis(ax.delta_r, cfg.delta_r);

  std::vector<ScenarioConfig> out;
  out.reserve(ax.point_count());
  for (double n : ns)
    for (double l : ls)
      for (double r : rs)
        for (double t : ts)
          for (double a : as)
            for (double d : ds) {
              ScenarioConfig point = cfg;
              point.sweep = SweepAxes{};
              point.total_rounds = n;
              point.distance_km = l;
              if (!ax.distance_km.empty()) point.eta_override.reset();
              point.r_test = r;
              point.t_factor = t;
              point.alpha = a;
              point.delta_r = d;
              out.push_back(std::move(point));
            }
  return out;
}

namespace {

std::vector<KeyRateReport> run_points(const std::vector<ScenarioConfig>& points, int threads,
                                      const PointCallback& on_point) {
  const std::size_t total = points.size();
  std::vector<KeyRateReport> out(total);
  if (threads <= 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) {
      out[i] = run_point(points[i]);
      if (on_point) on_point(out[i], i, total);
    }
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::vector<char> done(total, 0);
  std::mutex m;
  std::condition_variable cv;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      KeyRateReport rep = run_point(points[i]);
      {
        std::lock_guard<std::mutex> lock(m);
        out[i] = std::move(rep);
        done[i] = 1;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  int n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), total);
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  {
    std::unique_lock<std::mutex> lock(m);
    for (std::size_t i = 0; i < total; ++i) {
      cv.wait(lock, [&] { return done[i] != 0; });
      if (on_point) on_point(out[i], i, total);
    }
  }
  for (auto& t : pool) t.join();
  return out;
}

} // namespace

std::vector<KeyRateReport> run_sweep(const ScenarioConfig& cfg, int threads,
                                     const PointCallback& on_point) {
  cfg.validate();
  return run_points(expand_sweep(cfg), threads, on_point);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 10; ++k) out.push_back((60 + 5 * k) / 100.0);
  return out;
}

std::vector<double> default_deltar_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 6; ++k) out.push_back(15 * k / 100.0);
  return out;
}

KeyRateReport optimize_amplitude_postselection(const ScenarioConfig& cfg,
                                               const std::vector<double>& alpha_grid,
                                               const std::vector<double>& deltar_grid,
                                               int threads, const PointCallback& on_point) {
  cfg.validate();
  if (alpha_grid.empty() || deltar_grid.empty())
    throw ConfigError("optimize: grids must be nonempty");

  std::vector<ScenarioConfig> points;
  points.reserve(alpha_grid.size() * deltar_grid.size());
  for (double a : alpha_grid)
    for (double d : deltar_grid) {
      ScenarioConfig point = cfg;
      point.sweep = SweepAxes{};
      point.alpha = a;
      point.delta_r = d;
      points.push_back(std::move(point));
    }
  std::vector<KeyRateReport> reps = run_points(points, threads, on_point);

  auto score = [&](const KeyRateReport& r) {
    if (!r.error.empty() || !r.certified) return -std::numeric_limits<double>::infinity();
    return cfg.t_factor == 0.0 ? r.secure_rate : r.expected_rate;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < reps.size(); ++i) {
    if (score(reps[i]) > score(reps[best])) best = i;
  }
  return reps[best];
}

} // namespace dmcv

#include "dmcv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dmcv/channel.hpp"

namespace dmcv {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, int line) {
  const char* begin = v.c_str();
  char* end = nullptr;
  double out = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(line, "not a number: '" + v + "'");
  return out;
}

int parse_int(const std::string& v, int line) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(line, "not an integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "not a boolean: '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "empty list entry");
    out.push_back(parse_double(item, line));
  }
  if (out.empty()) fail(line, "empty list");
  return out;
}

} // namespace

bool SweepAxes::empty() const {
  return total_rounds.empty() && distance_km.empty() && r_test.empty() && t_factor.empty() &&
         alpha.empty() && delta_r.empty();
}

std::size_t SweepAxes::point_count() const {
  auto dim = [](const std::vector<double>& v) { return v.empty() ? std::size_t{1} : v.size(); };
  return dim(total_rounds) * dim(distance_km) * dim(r_test) * dim(t_factor) * dim(alpha) *
         dim(delta_r);
}

double ScenarioConfig::effective_eta() const {
  return eta_override ? *eta_override : transmittance_from_distance(distance_km);
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  check(distance_km >= 0.0, "distance must be nonnegative");
  if (eta_override) check(*eta_override > 0.0 && *eta_override <= 1.0, "eta outside (0,1]");
  check(xi >= 0.0, "xi must be nonnegative");
  check(alpha > 0.0, "alpha must be positive");
  check(delta_r >= 0.0 && delta_r < range_bound, "delta_r outside [0,M)");
  check(range_bound > 0.0, "M must be positive");
  check(n_c >= 1, "n_c must be at least 1");
  check(n_states >= 2, "need at least two signal states");
  check(eta_d > 0.0 && eta_d <= 1.0, "eta_d outside (0,1]");
  check(nu_el >= 0.0, "nu_el must be nonnegative");
  if (trusted) check(eta_d < 1.0 || nu_el > 0.0, "trusted detector needs eta_d<1 or nu_el>0");
  check(total_rounds >= 2.0, "N too small");
  check(r_test > 0.0 && r_test < 1.0, "r_test outside (0,1)");
  check(lt_over_kt >= 0.0 && lt_over_kt < 1.0, "l_T/k_T ratio outside [0,1)");
  check(beta_test > 0.0 && beta_test <= range_bound, "beta_test outside (0,M]");
  check(t_factor >= 0.0, "t_factor must be nonnegative");
  check(w_min >= 0.0 && w_min < 1.0, "w_min outside [0,1)");
  budget.validate();
  check(beta_ec > 0.0 && beta_ec <= 1.0, "beta outside (0,1]");
  check(tol > 0.0, "tol must be positive");
  check(max_iter >= 1, "max_iter must be at least 1");
  check(eps_num >= 0.0, "eps_num must be nonnegative");
  check(backend == "internal" || backend == "external", "backend must be internal or external");
  for (double v : sweep.total_rounds) check(v >= 2.0, "sweep N too small");
  for (double v : sweep.distance_km) check(v >= 0.0, "sweep L must be nonnegative");
  for (double v : sweep.r_test) check(v > 0.0 && v < 1.0, "sweep r_test outside (0,1)");
  for (double v : sweep.t_factor) check(v >= 0.0, "sweep t_factor must be nonnegative");
  for (double v : sweep.alpha) check(v > 0.0, "sweep alpha must be positive");
  for (double v : sweep.delta_r)
    check(v >= 0.0 && v < range_bound, "sweep delta_r outside [0,M)");
}

ScenarioConfig parse_config_text(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "channel" && section != "protocol" && section != "detector" &&
          section != "plan" && section != "budget" && section != "ec" && section != "solver" &&
          section != "sweep") {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, "empty value for '" + key + "'");
    if (section.empty()) fail(line_no, "key '" + key + "' outside any section");

    if (section == "channel") {
      if (key == "L") cfg.distance_km = parse_double(value, line_no);
      else if (key == "eta") cfg.eta_override = parse_double(value, line_no);
      else if (key == "xi") cfg.xi = parse_double(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [channel]");
    } else if (section == "protocol") {
      if (key == "alpha") cfg.alpha = parse_double(value, line_no);
      else if (key == "delta_r") cfg.delta_r = parse_double(value, line_no);
      else if (key == "M") cfg.range_bound = parse_double(value, line_no);
      else if (key == "n_c") cfg.n_c = parse_int(value, line_no);
      else if (key == "n_states") cfg.n_states = parse_int(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [protocol]");
    } else if (section == "detector") {
      if (key == "trusted") cfg.trusted = parse_bool(value, line_no);
      else if (key == "eta_d") cfg.eta_d = parse_double(value, line_no);
      else if (key == "nu_el") cfg.nu_el = parse_double(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [detector]");
    } else if (section == "plan") {
      if (key == "mode") {
        if (value == "finite") cfg.mode = RunMode::finite;
        else if (value == "asymptotic") cfg.mode = RunMode::asymptotic;
        else fail(line_no, "mode must be finite or asymptotic");
      } else if (key == "N") cfg.total_rounds = parse_double(value, line_no);
      else if (key == "r_test") cfg.r_test = parse_double(value, line_no);
      else if (key == "lt_over_kt") cfg.lt_over_kt = parse_double(value, line_no);
      else if (key == "beta_test") cfg.beta_test = parse_double(value, line_no);
      else if (key == "t_factor") cfg.t_factor = parse_double(value, line_no);
      else if (key == "w_min") cfg.w_min = parse_double(value, line_no);
      else if (key == "mu_scaling") {
        if (value == "probability") cfg.mu_scaling = MuScaling::probability;
        else if (value == "plain") cfg.mu_scaling = MuScaling::plain;
        else fail(line_no, "mu_scaling must be probability or plain");
      } else if (key == "gamma_convention") {
        if (value == "squared") cfg.gamma_convention = GammaConvention::squared;
        else if (value == "literal") cfg.gamma_convention = GammaConvention::literal;
        else fail(line_no, "gamma_convention must be squared or literal");
      } else fail(line_no, "unknown key '" + key + "' in [plan]");
    } else if (section == "budget") {
      if (key == "eps_ec") cfg.budget.eps_ec = parse_double(value, line_no);
      else if (key == "eps_pa") cfg.budget.eps_pa = parse_double(value, line_no);
      else if (key == "eps_bar") cfg.budget.eps_bar = parse_double(value, line_no);
      else if (key == "eps_at") cfg.budget.eps_at = parse_double(value, line_no);
      else if (key == "eps_et") cfg.budget.eps_et = parse_double(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [budget]");
    } else if (section == "ec") {
      if (key == "beta") cfg.beta_ec = parse_double(value, line_no);
      else if (key == "eps_ec") cfg.budget.eps_ec = parse_double(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [ec]");
    } else if (section == "solver") {
      if (key == "tol") cfg.tol = parse_double(value, line_no);
      else if (key == "max_iter") cfg.max_iter = parse_int(value, line_no);
      else if (key == "eps_num") cfg.eps_num = parse_double(value, line_no);
      else if (key == "backend") {
        if (value != "internal" && value != "external")
          fail(line_no, "backend must be internal or external");
        cfg.backend = value;
      } else if (key == "literal_bounds") cfg.literal_bounds = parse_bool(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [solver]");
    } else if (section == "sweep") {
      if (key == "N") cfg.sweep.total_rounds = parse_list(value, line_no);
      else if (key == "L") cfg.sweep.distance_km = parse_list(value, line_no);
      else if (key == "r_test") cfg.sweep.r_test = parse_list(value, line_no);
      else if (key == "t_factor") cfg.sweep.t_factor = parse_list(value, line_no);
      else if (key == "alpha") cfg.sweep.alpha = parse_list(value, line_no);
      else if (key == "delta_r") cfg.sweep.delta_r = parse_list(value, line_no);
      else fail(line_no, "unknown key '" + key + "' in [sweep]");
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

std::string to_string(MuScaling v) {
  return v == MuScaling::probability ? "probability" : "plain";
}
std::string to_string(RunMode v) { return v == RunMode::finite ? "finite" : "asymptotic"; }
std::string to_string(GammaConvention v) {
  return v == GammaConvention::squared ? "squared" : "literal";
}

std::string resolved_config_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
  auto kd = [&](const std::string& k, double v) { kv(k, format_double(v)); };
  auto ki = [&](const std::string& k, int v) { kv(k, std::to_string(v)); };
  auto kb = [&](const std::string& k, bool v) { kv(k, v ? "true" : "false"); };
  auto kl = [&](const std::string& k, const std::vector<double>& v) {
    if (v.empty()) return;
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) joined += ", ";
      joined += format_double(v[i]);
    }
    kv(k, joined);
  };

  out << "[channel]\n";
  kd("L", cfg.distance_km);
  if (cfg.eta_override) kd("eta", *cfg.eta_override);
  kd("xi", cfg.xi);
  out << "\n[protocol]\n";
  kd("alpha", cfg.alpha);
  kd("delta_r", cfg.delta_r);
  kd("M", cfg.range_bound);
  ki("n_c", cfg.n_c);
  ki("n_states", cfg.n_states);
  out << "\n[detector]\n";
  kb("trusted", cfg.trusted);
  kd("eta_d", cfg.eta_d);
  kd("nu_el", cfg.nu_el);
  out << "\n[plan]\n";
  kv("mode", to_string(cfg.mode));
  kd("N", cfg.total_rounds);
  kd("r_test", cfg.r_test);
  kd("lt_over_kt", cfg.lt_over_kt);
  kd("beta_test", cfg.beta_test);
  kd("t_factor", cfg.t_factor);
  kd("w_min", cfg.w_min);
  kv("mu_scaling", to_string(cfg.mu_scaling));
  kv("gamma_convention", to_string(cfg.gamma_convention));
  out << "\n[budget]\n";
  kd("eps_ec", cfg.budget.eps_ec);
  kd("eps_pa", cfg.budget.eps_pa);
  kd("eps_bar", cfg.budget.eps_bar);
  kd("eps_at", cfg.budget.eps_at);
  kd("eps_et", cfg.budget.eps_et);
  out << "\n[ec]\n";
  kd("beta", cfg.beta_ec);
  out << "\n[solver]\n";
  kd("tol", cfg.tol);
  ki("max_iter", cfg.max_iter);
  kd("eps_num", cfg.eps_num);
  kv("backend", cfg.backend);
  kb("literal_bounds", cfg.literal_bounds);
  out << "\n[sweep]\n";
  kl("N", cfg.sweep.total_rounds);
  kl("L", cfg.sweep.distance_km);
  kl("r_test", cfg.sweep.r_test);
  kl("t_factor", cfg.sweep.t_factor);
  kl("alpha", cfg.sweep.alpha);
  kl("delta_r", cfg.sweep.delta_r);
  return out.str();
}

} // namespace dmcv

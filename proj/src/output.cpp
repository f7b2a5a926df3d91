#include "dmcv/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dmcv {

namespace {

double parse_double_field(const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  double out = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw std::runtime_error("csv: not a number: '" + v + "'");
  return out;
}

int parse_int_field(const std::string& v) {
  return static_cast<int>(parse_double_field(v));
}

bool parse_bool_field(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::runtime_error("csv: not a boolean: '" + v + "'");
}

struct Column {
  std::string name;
  std::function<std::string(const KeyRateReport&)> get;
  std::function<void(KeyRateReport&, const std::string&)> set;
};

std::string fb(bool v) { return v ? "true" : "false"; }

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = [] {
    std::vector<Column> c;
    auto add = [&](std::string name, std::function<std::string(const KeyRateReport&)> get,
                   std::function<void(KeyRateReport&, const std::string&)> set) {
      c.push_back({std::move(name), std::move(get), std::move(set)});
    };
    auto addd = [&](std::string name, double KeyRateReport::* f) {
      add(std::move(name), [f](const KeyRateReport& r) { return format_double(r.*f); },
          [f](KeyRateReport& r, const std::string& v) { r.*f = parse_double_field(v); });
    };
    auto addc = [&](std::string name, double ScenarioConfig::* f) {
      add(std::move(name),
          [f](const KeyRateReport& r) { return format_double(r.config.*f); },
          [f](KeyRateReport& r, const std::string& v) { r.config.*f = parse_double_field(v); });
    };

    add("mode", [](const KeyRateReport& r) { return to_string(r.config.mode); },
        [](KeyRateReport& r, const std::string& v) {
          if (v == "finite") r.config.mode = RunMode::finite;
          else if (v == "asymptotic") r.config.mode = RunMode::asymptotic;
          else throw std::runtime_error("csv: unknown mode '" + v + "'");
        });
    addc("L_km", &ScenarioConfig::distance_km);
    add("eta_fixed",
        [](const KeyRateReport& r) {
          return r.config.eta_override ? format_double(*r.config.eta_override) : std::string();
        },
        [](KeyRateReport& r, const std::string& v) {
          if (v.empty()) r.config.eta_override.reset();
          else r.config.eta_override = parse_double_field(v);
        });
    addd("eta", &KeyRateReport::eta);
    addc("xi", &ScenarioConfig::xi);
    addc("alpha", &ScenarioConfig::alpha);
    addc("delta_r", &ScenarioConfig::delta_r);
    addc("M", &ScenarioConfig::range_bound);
    add("n_c", [](const KeyRateReport& r) { return std::to_string(r.config.n_c); },
        [](KeyRateReport& r, const std::string& v) { r.config.n_c = parse_int_field(v); });
    add("n_states", [](const KeyRateReport& r) { return std::to_string(r.config.n_states); },
        [](KeyRateReport& r, const std::string& v) { r.config.n_states = parse_int_field(v); });
    add("trusted", [](const KeyRateReport& r) { return fb(r.config.trusted); },
        [](KeyRateReport& r, const std::string& v) { r.config.trusted = parse_bool_field(v); });
    addc("eta_d", &ScenarioConfig::eta_d);
    addc("nu_el", &ScenarioConfig::nu_el);
    addc("N", &ScenarioConfig::total_rounds);
    addc("r_test", &ScenarioConfig::r_test);
    addc("lt_over_kt", &ScenarioConfig::lt_over_kt);
    addc("beta_test", &ScenarioConfig::beta_test);
    addc("t_factor", &ScenarioConfig::t_factor);
    addc("w_min", &ScenarioConfig::w_min);
    add("mu_scaling", [](const KeyRateReport& r) { return to_string(r.config.mu_scaling); },
        [](KeyRateReport& r, const std::string& v) {
          if (v == "probability") r.config.mu_scaling = MuScaling::probability;
          else if (v == "plain") r.config.mu_scaling = MuScaling::plain;
          else throw std::runtime_error("csv: unknown mu_scaling '" + v + "'");
        });
    add("gamma_convention",
        [](const KeyRateReport& r) { return to_string(r.config.gamma_convention); },
        [](KeyRateReport& r, const std::string& v) {
          if (v == "squared") r.config.gamma_convention = GammaConvention::squared;
          else if (v == "literal") r.config.gamma_convention = GammaConvention::literal;
          else throw std::runtime_error("csv: unknown gamma_convention '" + v + "'");
        });
    auto addb = [&](std::string name, double EpsilonBudget::* f) {
      add(std::move(name),
          [f](const KeyRateReport& r) { return format_double(r.config.budget.*f); },
          [f](KeyRateReport& r, const std::string& v) {
            r.config.budget.*f = parse_double_field(v);
          });
    };
    addb("eps_ec", &EpsilonBudget::eps_ec);
    addb("eps_pa", &EpsilonBudget::eps_pa);
    addb("eps_bar", &EpsilonBudget::eps_bar);
    addb("eps_at", &EpsilonBudget::eps_at);
    addb("eps_et", &EpsilonBudget::eps_et);
    addc("beta_ec", &ScenarioConfig::beta_ec);
    addc("tol", &ScenarioConfig::tol);
    add("max_iter", [](const KeyRateReport& r) { return std::to_string(r.config.max_iter); },
        [](KeyRateReport& r, const std::string& v) { r.config.max_iter = parse_int_field(v); });
    addc("eps_num", &ScenarioConfig::eps_num);
    add("backend", [](const KeyRateReport& r) { return r.config.backend; },
        [](KeyRateReport& r, const std::string& v) { r.config.backend = v; });
    add("literal_bounds", [](const KeyRateReport& r) { return fb(r.config.literal_bounds); },
        [](KeyRateReport& r, const std::string& v) {
          r.config.literal_bounds = parse_bool_field(v);
        });

    addd("k_test", &KeyRateReport::k_test);
    addd("n_keep", &KeyRateReport::n_keep);
    addd("l_test", &KeyRateReport::l_test);
    addd("w_exp", &KeyRateReport::w_exp);
    addd("w_eps", &KeyRateReport::w_eps);
    addd("w", &KeyRateReport::w);
    addd("mu_q1", &KeyRateReport::mu_q1);
    addd("mu_q2", &KeyRateReport::mu_q2);
    addd("t_q1", &KeyRateReport::t_q1);
    addd("t_q2", &KeyRateReport::t_q2);
    addd("p_pass", &KeyRateReport::p_pass);
    addd("delta_ec", &KeyRateReport::delta_ec);
    addd("leak_per_use", &KeyRateReport::leak_per_use);
    addd("h_bound", &KeyRateReport::h_bound);
    addd("primal_value", &KeyRateReport::primal_value);
    addd("fw_gap", &KeyRateReport::fw_gap);
    addd("eps_num_slack", &KeyRateReport::eps_num_slack);
    add("solver_iterations",
        [](const KeyRateReport& r) { return std::to_string(r.solver_iterations); },
        [](KeyRateReport& r, const std::string& v) { r.solver_iterations = parse_int_field(v); });
    add("solver_status", [](const KeyRateReport& r) { return r.solver_status; },
        [](KeyRateReport& r, const std::string& v) { r.solver_status = v; });
    add("certified", [](const KeyRateReport& r) { return fb(r.certified); },
        [](KeyRateReport& r, const std::string& v) { r.certified = parse_bool_field(v); });
    addd("eps_c_et", &KeyRateReport::eps_c_et);
    addd("eps_c_at", &KeyRateReport::eps_c_at);
    addd("nu_c", &KeyRateReport::nu_c);
    addd("raw_rate", &KeyRateReport::raw_rate);
    addd("secure_rate", &KeyRateReport::secure_rate);
    addd("expected_rate", &KeyRateReport::expected_rate);
    addd("wall_time_s", &KeyRateReport::wall_time_s);
    add("error", [](const KeyRateReport& r) { return r.error; },
        [](KeyRateReport& r, const std::string& v) { r.error = v; });
    return c;
  }();
  return cols;
}

std::string csv_escape(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

} // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Column& c : columns()) out.push_back(c.name);
    return out;
  }();
  return names;
}

std::string csv_header_line() {
  std::string out;
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i].name;
  }
  out += '\n';
  return out;
}

std::string report_to_csv_row(const KeyRateReport& rep) {
  std::string out;
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(cols[i].get(rep));
  }
  out += '\n';
  return out;
}

std::string reports_to_csv(const std::vector<KeyRateReport>& reports) {
  std::string out = csv_header_line();
  for (const KeyRateReport& rep : reports) out += report_to_csv_row(rep);
  return out;
}

std::vector<KeyRateReport> parse_reports_csv(const std::string& csv) {
  std::vector<std::string> lines;
  {
    std::string cur;
    bool quoted = false;
    for (char ch : csv) {
      if (ch == '"') quoted = !quoted;
      if (ch == '\n' && !quoted) {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        lines.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
  }
  if (lines.empty()) throw std::runtime_error("csv: empty document");

  const auto& cols = columns();
  std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.size() != cols.size()) throw std::runtime_error("csv: unexpected column count");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (header[i] != cols[i].name)
      throw std::runtime_error("csv: unexpected column '" + header[i] + "'");
  }

  std::vector<KeyRateReport> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    std::vector<std::string> fields = split_csv_line(lines[li]);
    if (fields.size() != cols.size())
      throw std::runtime_error("csv: wrong field count on data line " + std::to_string(li + 1));
    KeyRateReport rep;
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i].set(rep, fields[i]);
    out.push_back(std::move(rep));
  }
  return out;
}

double report_field(const KeyRateReport& rep, const std::string& column) {
  for (const Column& c : columns()) {
    if (c.name == column) {
      std::string v = c.get(rep);
      const char* begin = v.c_str();
      char* end = nullptr;
      double out = std::strtod(begin, &end);
      if (end == begin || *end != '\0')
        throw std::runtime_error("column '" + column + "' is not numeric");
      return out;
    }
  }
  throw std::runtime_error("unknown column '" + column + "'");
}

std::string run_manifest_json(const ScenarioConfig& resolved, const std::string& command,
                              const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["artifact"] = {{"name", "dmcv-keyrate"}, {"version", "0.1.0"}};
  j["command"] = command;

  nlohmann::ordered_json cfg;
  cfg["channel"] = {{"L", resolved.distance_km}, {"xi", resolved.xi}};
  if (resolved.eta_override) cfg["channel"]["eta"] = *resolved.eta_override;
  cfg["protocol"] = {{"alpha", resolved.alpha},
                     {"delta_r", resolved.delta_r},
                     {"M", resolved.range_bound},
                     {"n_c", resolved.n_c},
                     {"n_states", resolved.n_states}};
  cfg["detector"] = {{"trusted", resolved.trusted},
                     {"eta_d", resolved.eta_d},
                     {"nu_el", resolved.nu_el}};
  cfg["plan"] = {{"mode", to_string(resolved.mode)},
                 {"N", resolved.total_rounds},
                 {"r_test", resolved.r_test},
                 {"lt_over_kt", resolved.lt_over_kt},
                 {"beta_test", resolved.beta_test},
                 {"t_factor", resolved.t_factor},
                 {"w_min", resolved.w_min},
                 {"mu_scaling", to_string(resolved.mu_scaling)},
                 {"gamma_convention", to_string(resolved.gamma_convention)}};
  cfg["budget"] = {{"eps_ec", resolved.budget.eps_ec},
                   {"eps_pa", resolved.budget.eps_pa},
                   {"eps_bar", resolved.budget.eps_bar},
                   {"eps_at", resolved.budget.eps_at},
                   {"eps_et", resolved.budget.eps_et}};
  cfg["ec"] = {{"beta", resolved.beta_ec}};
  cfg["solver"] = {{"tol", resolved.tol},
                   {"max_iter", resolved.max_iter},
                   {"eps_num", resolved.eps_num},
                   {"backend", resolved.backend},
                   {"literal_bounds", resolved.literal_bounds}};
  nlohmann::ordered_json sweep;
  auto put_axis = [&](const char* name, const std::vector<double>& v) {
    if (!v.empty()) sweep[name] = v;
  };
  put_axis("N", resolved.sweep.total_rounds);
  put_axis("L", resolved.sweep.distance_km);
  put_axis("r_test", resolved.sweep.r_test);
  put_axis("t_factor", resolved.sweep.t_factor);
  put_axis("alpha", resolved.sweep.alpha);
  put_axis("delta_r", resolved.sweep.delta_r);
  cfg["sweep"] = std::move(sweep);
  j["config"] = std::move(cfg);
  j["resolved_config_text"] = resolved_config_text(resolved);
  j["csv_columns"] = csv_columns();
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

namespace {

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

} // namespace

std::string sweep_plot_svg(const std::vector<KeyRateReport>& reports,
                           const std::string& x_column) {
  if (reports.empty()) throw std::runtime_error("plot: no data points");
  const double width = 760, height = 520;
  const double ml = 90, mr = 30, mt = 40, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::vector<double> xs, y_exp, y_sec;
  for (const KeyRateReport& r : reports) {
    xs.push_back(report_field(r, x_column));
    y_exp.push_back(r.expected_rate);
    y_sec.push_back(r.secure_rate);
  }

  double xmin = xs.empty() ? 0.0 : xs[0], xmax = xmin;
  for (double v : xs) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  const bool logx = xmin > 0.0 && xmax / xmin >= 100.0;

  double ymax = 0.0;
  double ymin_pos = std::numeric_limits<double>::infinity();
  for (double v : y_sec) {
    ymax = std::max(ymax, v);
    if (v > 0.0) ymin_pos = std::min(ymin_pos, v);
  }
  for (double v : y_exp) {
    ymax = std::max(ymax, v);
    if (v > 0.0) ymin_pos = std::min(ymin_pos, v);
  }
  if (!(ymax > 0.0)) {
    ymax = 1.0;
    ymin_pos = 1e-8;
  }
  if (!std::isfinite(ymin_pos)) ymin_pos = ymax / 1e6;
  double lo = std::floor(std::log10(ymin_pos)) - 0.2;
  double hi = std::ceil(std::log10(ymax)) + 0.2;
  if (hi - lo < 1.0) hi = lo + 1.0;

  auto xpos = [&](double v) {
    double t = logx ? (std::log10(v) - std::log10(xmin)) / (std::log10(xmax) - std::log10(xmin))
                    : (v - xmin) / (xmax - xmin);
    return ml + t * pw;
  };
  auto ypos = [&](double v) {
    double lv = v > 0.0 ? std::log10(v) : lo;
    lv = std::max(lo, std::min(hi, lv));
    return mt + (hi - lv) / (hi - lo) * ph;
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  s << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
    << " font-size=\"15\">rate per channel use vs " << x_column << "</text>\n";

  for (int d = static_cast<int>(std::ceil(lo)); d <= static_cast<int>(std::floor(hi)); ++d) {
    double y = ypos(std::pow(10.0, d));
    s << "<line x1=\"" << ml << "\" y1=\"" << svg_num(y) << "\" x2=\"" << ml + pw << "\" y2=\""
      << svg_num(y) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << ml - 8 << "\" y=\"" << svg_num(y + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << d
      << "</text>\n";
  }
  const int n_xticks = 5;
  for (int k = 0; k <= n_xticks; ++k) {
    double v = logx ? xmin * std::pow(xmax / xmin, static_cast<double>(k) / n_xticks)
                    : xmin + (xmax - xmin) * k / n_xticks;
    double x = xpos(v);
    s << "<line x1=\"" << svg_num(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << svg_num(x)
      << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#333333\"/>\n";
    s << "<text x=\"" << svg_num(x) << "\" y=\"" << mt + ph + 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_double(v) << "</text>\n";
  }
  s << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  s << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_column
    << "</text>\n";

  auto polyline = [&](const std::vector<double>& ys, const char* color, const char* dash) {
    if (xs.empty()) return;
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (dash[0] != '\0') s << " stroke-dasharray=\"" << dash << "\"";
    s << " points=\"";
    for (std::size_t i : order) s << svg_num(xpos(xs[i])) << "," << svg_num(ypos(ys[i])) << " ";
    s << "\"/>\n";
    for (std::size_t i : order) {
      s << "<circle cx=\"" << svg_num(xpos(xs[i])) << "\" cy=\"" << svg_num(ypos(ys[i]))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  };
  polyline(y_sec, "#1963a8", "");
  polyline(y_exp, "#c23b22", "6,4");
  s << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 18
    << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1963a8\">secure rate</text>\n";
  s << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 36
    << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c23b22\">expected rate</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace dmcv

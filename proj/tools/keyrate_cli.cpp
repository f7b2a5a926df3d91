#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmcv/config.hpp"
#include "dmcv/output.hpp"
#include "dmcv/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::string backend;
  int nc = 0;
  bool literal_primal = false;
  std::string gamma_convention;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Scenario config file");
  cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--threads", opts.threads, "Worker threads for multi-point runs")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  cmd->add_option("--backend", opts.backend, "Conic solver backend")
      ->check(CLI::IsMember({"internal", "external"}));
  cmd->add_option("--nc", opts.nc, "Override the photon-number cutoff")->check(CLI::Range(1, 64));
  cmd->add_flag("--literal-primal", opts.literal_primal,
                "Use the one-sided printed constraint system (comparison mode)");
  cmd->add_option("--gamma-convention", opts.gamma_convention,
                  "Tail-ratio incomplete-gamma argument convention")
      ->check(CLI::IsMember({"literal", "squared"}));
}

dmcv::ScenarioConfig resolve_config(const CommonOpts& opts) {
  dmcv::ScenarioConfig cfg;
  if (!opts.config_path.empty()) cfg = dmcv::load_config_file(opts.config_path);
  if (!opts.backend.empty()) cfg.backend = opts.backend;
  if (opts.nc > 0) cfg.n_c = opts.nc;
  if (opts.literal_primal) cfg.literal_bounds = true;
  if (opts.gamma_convention == "literal") cfg.gamma_convention = dmcv::GammaConvention::literal;
  if (opts.gamma_convention == "squared") cfg.gamma_convention = dmcv::GammaConvention::squared;
  cfg.validate();
  return cfg;
}

bool point_ok(const dmcv::KeyRateReport& rep) { return rep.error.empty() && rep.certified; }

void print_point(const dmcv::KeyRateReport& rep) {
  std::printf("L = %s km  eta = %s  N = %s  r_test = %s  alpha = %s  delta_r = %s  n_c = %d\n",
              dmcv::format_double(rep.config.distance_km).c_str(),
              dmcv::format_double(rep.eta).c_str(),
              dmcv::format_double(rep.config.total_rounds).c_str(),
              dmcv::format_double(rep.config.r_test).c_str(),
              dmcv::format_double(rep.config.alpha).c_str(),
              dmcv::format_double(rep.config.delta_r).c_str(), rep.config.n_c);
  if (!rep.error.empty()) {
    std::printf("  FAILED: %s\n", rep.error.c_str());
    return;
  }
  std::printf("  w = %s (w_exp %s, w_eps %s)  p_pass = %s\n",
              dmcv::format_double(rep.w).c_str(), dmcv::format_double(rep.w_exp).c_str(),
              dmcv::format_double(rep.w_eps).c_str(), dmcv::format_double(rep.p_pass).c_str());
  std::printf("  solver: %s in %d iterations, gap %s, slack %s\n", rep.solver_status.c_str(),
              rep.solver_iterations, dmcv::format_double(rep.fw_gap).c_str(),
              dmcv::format_double(rep.eps_num_slack).c_str());
  std::printf("  entropy bound = %s bits/use, leakage = %s bits/use\n",
              dmcv::format_double(rep.h_bound).c_str(),
              dmcv::format_double(rep.leak_per_use).c_str());
  std::printf("  rate: raw = %s, secure = %s, expected = %s (nu_c = %s)\n",
              dmcv::format_double(rep.raw_rate).c_str(),
              dmcv::format_double(rep.secure_rate).c_str(),
              dmcv::format_double(rep.expected_rate).c_str(),
              dmcv::format_double(rep.nu_c).c_str());
  std::printf("  wall time: %.1f s\n", rep.wall_time_s);
}

std::string join_command(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

// Streams rows to disk as points finish, so aborted sweeps keep their partial
// table.
class CsvSink {
 public:
  CsvSink(const std::filesystem::path& path) : path_(path.string()) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open for writing: " + path_);
    out_ << dmcv::csv_header_line();
    out_.flush();
  }
  void append(const dmcv::KeyRateReport& rep) {
    out_ << dmcv::report_to_csv_row(rep);
    out_.flush();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

std::vector<std::string> swept_axes(const dmcv::SweepAxes& ax) {
  std::vector<std::string> out;
  if (!ax.total_rounds.empty()) out.push_back("N");
  if (!ax.distance_km.empty()) out.push_back("L_km");
  if (!ax.r_test.empty()) out.push_back("r_test");
  if (!ax.t_factor.empty()) out.push_back("t_factor");
  if (!ax.alpha.empty()) out.push_back("alpha");
  if (!ax.delta_r.empty()) out.push_back("delta_r");
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified finite-size secure key rates for discrete-modulated CV-QKD"};
  app.require_subcommand(1);

  CommonOpts point_opts, sweep_opts, opt_opts, plot_opts;
  CLI::App* point_cmd = app.add_subcommand("point", "Evaluate a single scenario point");
  add_common(point_cmd, point_opts);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Evaluate the Cartesian sweep axes");
  add_common(sweep_cmd, sweep_opts);
  CLI::App* opt_cmd =
      app.add_subcommand("optimize", "Grid search over (alpha, delta_r) at fixed channel");
  add_common(opt_cmd, opt_opts);
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render a static SVG from a results CSV");
  std::string plot_csv, plot_x = "L_km";
  plot_cmd->add_option("csv", plot_csv, "Results CSV produced by point/sweep/optimize")
      ->required();
  plot_cmd->add_option("--x", plot_x, "Schema column for the x axis")->capture_default_str();
  std::string plot_out_dir = ".";
  plot_cmd->add_option("--out", plot_out_dir, "Output SVG path (*.svg) or directory")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  const std::string command = join_command(argc, argv);

  try {
    if (*plot_cmd) {
      std::ifstream in(plot_csv, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open CSV: " + plot_csv);
      std::ostringstream buf;
      buf << in.rdbuf();
      std::vector<dmcv::KeyRateReport> reports = dmcv::parse_reports_csv(buf.str());
      if (reports.empty()) throw std::runtime_error("CSV has no data rows");
      std::filesystem::path svg(plot_out_dir);
      if (svg.extension() == ".svg") {
        if (svg.has_parent_path()) std::filesystem::create_directories(svg.parent_path());
      } else {
        std::filesystem::create_directories(svg);
        svg /= "rate_vs_" + plot_x + ".svg";
      }
      dmcv::write_text_file(svg.string(), dmcv::sweep_plot_svg(reports, plot_x));
      std::printf("wrote %s\n", svg.string().c_str());
      return 0;
    }

    const CommonOpts& opts = *point_cmd ? point_opts : (*sweep_cmd ? sweep_opts : opt_opts);
    dmcv::ScenarioConfig cfg = resolve_config(opts);
    std::filesystem::create_directories(opts.out_dir);
    std::filesystem::path out_dir(opts.out_dir);
    std::vector<std::string> outputs;
    bool all_ok = true;

    if (*point_cmd) {
      CsvSink sink(out_dir / "point.csv");
      dmcv::KeyRateReport rep = dmcv::run_point(cfg);
      sink.append(rep);
      print_point(rep);
      all_ok = point_ok(rep);
      outputs.push_back(sink.path());
    } else if (*sweep_cmd) {
      CsvSink sink(out_dir / "sweep.csv");
      std::vector<dmcv::KeyRateReport> reports = dmcv::run_sweep(
          cfg, opts.threads,
          [&](const dmcv::KeyRateReport& rep, std::size_t i, std::size_t total) {
            sink.append(rep);
            std::printf("[%zu/%zu] %s  rate %s\n", i + 1, total,
                        rep.error.empty() ? rep.solver_status.c_str() : rep.error.c_str(),
                        dmcv::format_double(rep.secure_rate).c_str());
            std::fflush(stdout);
          });
      outputs.push_back(sink.path());
      for (const dmcv::KeyRateReport& rep : reports) all_ok = all_ok && point_ok(rep);
      std::vector<std::string> axes = swept_axes(cfg.sweep);
      if (axes.size() == 1) {
        std::filesystem::path svg = out_dir / ("rate_vs_" + axes[0] + ".svg");
        dmcv::write_text_file(svg.string(), dmcv::sweep_plot_svg(reports, axes[0]));
        outputs.push_back(svg.string());
      }
    } else {
      std::vector<double> alpha_grid =
          cfg.sweep.alpha.empty() ? dmcv::default_alpha_grid() : cfg.sweep.alpha;
      std::vector<double> deltar_grid =
          cfg.sweep.delta_r.empty() ? dmcv::default_deltar_grid() : cfg.sweep.delta_r;
      CsvSink sink(out_dir / "optimize.csv");
      dmcv::KeyRateReport best = dmcv::optimize_amplitude_postselection(
          cfg, alpha_grid, deltar_grid, opts.threads,
          [&](const dmcv::KeyRateReport& rep, std::size_t i, std::size_t total) {
            sink.append(rep);
            all_ok = all_ok && point_ok(rep);
            std::printf("[%zu/%zu] alpha %s delta_r %s  rate %s\n", i + 1, total,
                        dmcv::format_double(rep.config.alpha).c_str(),
                        dmcv::format_double(rep.config.delta_r).c_str(),
                        dmcv::format_double(rep.secure_rate).c_str());
            std::fflush(stdout);
          });
      outputs.push_back(sink.path());
      std::printf("best cell:\n");
      print_point(best);
    }

    std::filesystem::path manifest = out_dir / "run_manifest.json";
    dmcv::write_text_file(manifest.string(), dmcv::run_manifest_json(cfg, command, outputs));
    return all_ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

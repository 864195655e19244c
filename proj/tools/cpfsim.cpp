#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "cpfsim/config.hpp"
#include "cpfsim/errors.hpp"
#include "cpfsim/exec.hpp"
#include "cpfsim/grid_io.hpp"
#include "cpfsim/runner.hpp"
#include "cpfsim/validation.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::size_t> traj,
            bool allow_degenerate, const std::string& format) {
  const auto cfg = cpfsim::config::load_config(path);
  cpfsim::runner::RunOptions opts;
  if (cfg.kind == cpfsim::config::ModelKind::stochastic) {
    opts.seed = seed;
    opts.n_traj = traj;
  } else if (seed || traj) {
    std::cerr << "cpfsim: note: --seed/--traj ignored for exact model '" << cpfsim::config::to_string(cfg.kind)
              << "'\n";
  }
  const auto result = cpfsim::runner::run_experiment(cfg, opts);
  const auto& grid = result.grid;

  for (const auto& e : result.errors) {
    std::cerr << "cpfsim: degenerate cell t=" << cpfsim::io::format_double(grid.t[e.i])
              << " tau=" << cpfsim::io::format_double(grid.tau[e.j]) << ": " << e.message << "\n";
  }

  const bool want_csv = format.empty() || format == "csv";
  const bool want_json = format.empty() || format == "json";
  bool wrote = false;
  if (want_csv && !cfg.output.csv.empty()) {
    cpfsim::io::write_text(cfg.output.csv, cpfsim::io::to_csv(grid));
    wrote = true;
  }
  if (want_json && !cfg.output.json.empty()) {
    cpfsim::io::write_text(cfg.output.json, cpfsim::io::to_json(grid));
    wrote = true;
  }
  if (!cfg.output.svg.empty()) cpfsim::io::write_text(cfg.output.svg, cpfsim::io::to_svg(grid));
  if (!wrote) std::cout << (format == "json" ? cpfsim::io::to_json(grid) : cpfsim::io::to_csv(grid));

  std::fprintf(stderr, "cpfsim: %zu cells in %.2f s, config hash %s\n", grid.cells(), result.wall_seconds,
               grid.meta.config_hash.c_str());
  if (!result.errors.empty() && !(allow_degenerate || cfg.allow_degenerate)) return kExitDegenerate;
  return 0;
}

int cmd_validate(const std::string& suite, const std::vector<std::size_t>& sizes, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> traj, bool json) {
  cpfsim::validation::SuiteOptions opts;
  if (!sizes.empty()) opts.cross_path_sizes = sizes;
  if (seed) opts.seed = *seed;
  if (traj) opts.n_traj = *traj;
  const auto results = cpfsim::validation::run_suite(suite, opts);
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (!json) std::cout << cpfsim::validation::format_line(r) << "\n";
  }
  if (json) std::cout << cpfsim::validation::to_json(results);
  return ok ? 0 : kExitFailure;
}

int cmd_render(const std::string& in, const std::string& out) {
  cpfsim::io::write_text(out, cpfsim::io::to_svg(cpfsim::io::read_csv(in)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional past-future correlation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CPFSIM_VERSION);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)")
      ->envname("CPFSIM_THREADS")
      ->check(CLI::PositiveNumber);

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> traj;

  auto* run = app.add_subcommand("run", "Sweep the (t, tau) grid of a configuration file");
  std::string config_path;
  bool allow_degenerate = false;
  std::string format;
  run->add_option("config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the Monte Carlo master seed");
  run->add_option("--traj", traj, "Override the number of trajectories")->check(CLI::PositiveNumber);
  run->add_flag("--allow-degenerate", allow_degenerate, "Exit 0 even when some cells are degenerate");
  run->add_option("--format", format, "Write only this output format")->check(CLI::IsMember({"csv", "json"}));

  auto* validate = app.add_subcommand("validate", "Run the built-in acceptance checks");
  std::string suite = "all";
  std::vector<std::size_t> sizes;
  bool json = false;
  validate->add_option("suite", suite, "Suite name")->check(CLI::IsMember(cpfsim::validation::suite_names()));
  validate->add_option("--n", sizes, "Bath sizes for the cross-path suite");
  validate->add_option("--seed", seed, "Seed for randomized and Monte Carlo checks");
  validate->add_option("--traj", traj, "Trajectories per Monte Carlo estimate")->check(CLI::PositiveNumber);
  validate->add_flag("--json", json, "Print results as JSON");

  auto* render = app.add_subcommand("render", "Render a grid CSV as an SVG heatmap");
  std::string grid_path;
  std::string svg_path;
  render->add_option("grid", grid_path, "Grid CSV")->required()->check(CLI::ExistingFile);
  render->add_option("-o,--output", svg_path, "Output SVG")->required();

  app.fallthrough();
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) cpfsim::set_worker_count(threads);

  try {
    if (*run) return cmd_run(config_path, seed, traj, allow_degenerate, format);
    if (*validate) return cmd_validate(suite, sizes, seed, traj, json);
    if (*render) return cmd_render(grid_path, svg_path);
  } catch (const cpfsim::ConfigError& e) {
    std::cerr << "cpfsim: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "cpfsim: error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

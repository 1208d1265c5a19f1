// mimo-gt: analysis, optimisation and Monte Carlo driver for MIMO group-testing
// random access.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mimogt/commands.hpp"

namespace {

using namespace mimogt;
using namespace mimogt::cli;

struct RawOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::size_t trials = 20000;
  unsigned workers = 1;
  bool json = false;
  std::string output;
  std::string axis;
  std::string grid;
  std::optional<double> from, to;
  std::size_t points = 0;
  bool log_spaced = false;
  std::optional<double> epsilon;
  std::string only;
  std::string codebook_mode = "fresh";
  bool fresh_flag = false;
  bool fixed_flag = false;
  bool use_config_design = false;
  std::string dump;
};

void add_common(CLI::App* sub, RawOptions& o, bool config_required) {
  auto* cfg = sub->add_option("--config", o.config, "key=value configuration file");
  if (config_required) cfg->required();
  sub->add_option("--set", o.sets, "override one key (key=value); repeatable");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--snr-db", o.snr_db, "SNR in dB (sets noise = power / 10^(dB/10))");
  sub->add_option("--workers", o.workers, "parallel workers")->check(CLI::PositiveNumber);
  sub->add_flag("--json", o.json, "machine-readable output");
  sub->add_option("--output", o.output, "CSV output path");
}

std::vector<std::pair<std::string, std::string>> split_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    out.emplace_back(mimogt::detail::trim(s.substr(0, eq)), mimogt::detail::trim(s.substr(eq + 1)));
  }
  return out;
}

ExperimentSpec build_spec(Command cmd, const RawOptions& o) {
  ExperimentSpec spec;
  spec.command = cmd;
  auto settings = o.config.empty() ? std::vector<std::pair<std::string, std::string>>{}
                                   : [&] {
                                       std::ifstream in(o.config);
                                       if (!in) throw ConfigError("cannot open config file '" + o.config + "'");
                                       return parse_config_lines(in);
                                     }();
  // Command-line overrides replace file entries with the same key.
  auto overrides = split_sets(o.sets);
  if (o.seed) overrides.emplace_back("seed", std::to_string(*o.seed));
  if (o.snr_db) overrides.emplace_back("snr_db", format_real_exact(*o.snr_db));
  for (const auto& [key, value] : overrides) {
    std::erase_if(settings, [&](const auto& kv) {
      return kv.first == key || (key == "snr_db" && kv.first == "noise") || (key == "noise" && kv.first == "snr_db");
    });
    settings.emplace_back(key, value);
  }
  spec.params = apply_settings(SystemParams{}, settings);
  spec.trials = o.trials;
  spec.workers = o.workers;
  spec.json = o.json;
  spec.output = o.output;
  spec.only = o.only;
  spec.use_config_design = o.use_config_design;
  spec.dump_path = o.dump;

  if (o.fresh_flag && o.fixed_flag) throw UsageError("--fresh-codebook and --fixed-codebook are exclusive");
  std::string mode = o.codebook_mode;
  if (o.fresh_flag) mode = "fresh";
  if (o.fixed_flag) mode = "fixed";
  if (mode == "fresh") spec.codebook_mode = CodebookMode::fresh;
  else if (mode == "fixed") spec.codebook_mode = CodebookMode::fixed;
  else throw UsageError("--codebook-mode must be fresh or fixed");

  if (cmd == Command::simulate || cmd == Command::verify) {
    if (spec.trials == 0) throw UsageError("--trials must be positive");
  }
  if (cmd == Command::sweep) {
    SweepSpec sw;
    if (o.axis.empty()) throw UsageError("sweep needs --axis");
    sw.axis = parse_axis(o.axis);
    if (!o.grid.empty()) {
      if (o.from || o.to || o.points) throw UsageError("use either --grid or --from/--to/--points");
      sw.grid = parse_grid_list(o.grid);
    } else {
      if (!o.from || !o.to || o.points == 0) throw UsageError("sweep needs --grid or --from, --to and --points");
      sw.grid = make_grid(*o.from, *o.to, o.points, o.log_spaced);
    }
    check_grid(sw.grid);
    sw.epsilon = o.epsilon;
    if (sw.epsilon && sw.axis != SweepAxis::k) throw UsageError("--epsilon only applies to the k axis");
    spec.sweep = sw;
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO group-testing random access: analysis, optimisation and simulation"};
  app.require_subcommand(1);
  RawOptions o;

  auto* analyze = app.add_subcommand("analyze", "analytic quantities for one parameter set");
  add_common(analyze, o, true);

  auto* optimize = app.add_subcommand("optimize", "optimal (p, gamma, Delta) and beta*");
  add_common(optimize, o, true);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo error rates at the designed M_r");
  add_common(simulate, o, true);
  simulate->add_option("--trials", o.trials, "rounds to simulate");
  simulate->add_option("--codebook-mode", o.codebook_mode, "fresh or fixed");
  simulate->add_flag("--fresh-codebook", o.fresh_flag, "draw a new codebook every round (default)");
  simulate->add_flag("--fixed-codebook", o.fixed_flag, "draw one codebook for the whole run");
  simulate->add_flag("--use-config-design", o.use_config_design,
                     "keep p, gamma, Delta and m_rx from the config instead of the optimiser");
  simulate->add_option("--dump", o.dump, "write one line per round to this file");

  auto* sweep = app.add_subcommand("sweep", "evaluate design quantities over a grid");
  add_common(sweep, o, true);
  sweep->add_option("--axis", o.axis, "rho, k, n, gamma or delta")->required();
  sweep->add_option("--grid", o.grid, "comma-separated grid values");
  sweep->add_option("--from", o.from, "grid start");
  sweep->add_option("--to", o.to, "grid end");
  sweep->add_option("--points", o.points, "grid size");
  sweep->add_flag("--log", o.log_spaced, "log-spaced grid");
  sweep->add_option("--epsilon", o.epsilon, "k axis: set N = ceil(K^(1/epsilon))");

  auto* verify = app.add_subcommand("verify", "run the invariant checks");
  add_common(verify, o, false);
  verify->add_option("--trials", o.trials, "Monte Carlo size per check");
  verify->add_option("--only", o.only, "energy, crossover, optimizer, bounds, decoder or converse");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  Command cmd = Command::analyze;
  if (*optimize) cmd = Command::optimize;
  else if (*simulate) cmd = Command::simulate;
  else if (*sweep) cmd = Command::sweep;
  else if (*verify) cmd = Command::verify;

  ExperimentSpec spec;
  try {
    spec = build_spec(cmd, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    return run(spec, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

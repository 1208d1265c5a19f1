#pragma once

// Command implementations behind the mimo-gt tool. Each command writes a
// human-readable report (or JSON) to `out`, and CSV either to the file named
// by ExperimentSpec::output or, when none is given, to `out` after the report.
//
// Exit codes: 0 success, 1 check failure, 2 usage or configuration error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mimogt/analysis.hpp"
#include "mimogt/csv.hpp"
#include "mimogt/decoder.hpp"
#include "mimogt/montecarlo.hpp"
#include "mimogt/params.hpp"
#include "mimogt/phy.hpp"
#include "mimogt/stats.hpp"

namespace mimogt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Raised for bad command-line input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { analyze, optimize, simulate, sweep, verify };
enum class SweepAxis { rho, k, n, gamma, delta };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::analyze: return "analyze";
    case Command::optimize: return "optimize";
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::verify: return "verify";
  }
  return "?";
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::rho: return "rho";
    case SweepAxis::k: return "k";
    case SweepAxis::n: return "n";
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::delta: return "delta";
  }
  return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "rho") return SweepAxis::rho;
  if (s == "k") return SweepAxis::k;
  if (s == "n") return SweepAxis::n;
  if (s == "gamma") return SweepAxis::gamma;
  if (s == "delta") return SweepAxis::delta;
  throw UsageError("unknown sweep axis '" + s + "' (expected rho, k, n, gamma or delta)");
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::rho;
  std::vector<double> grid;
  std::optional<double> epsilon;  // k axis: N = ceil(K^{1/ε})
};

struct ExperimentSpec {
  Command command = Command::analyze;
  SystemParams params;
  std::optional<SweepSpec> sweep;
  std::string output;
  std::size_t trials = 20000;
  unsigned workers = 1;
  bool json = false;
  std::string only;
  CodebookMode codebook_mode = CodebookMode::fresh;
  bool use_config_design = false;  // simulate: keep p, γ, Δ, M_r from the config
  std::string dump_path;
};

/// Grid of `points` values from `from` to `to`, linear or log spaced.
inline std::vector<double> make_grid(double from, double to, std::size_t points, bool log_spaced) {
  if (points == 0) throw UsageError("grid needs at least one point");
  if (points == 1) return {from};
  if (log_spaced && !(from > 0.0 && to > 0.0)) throw UsageError("log-spaced grid needs positive bounds");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    g[i] = log_spaced ? std::exp(std::log(from) + t * (std::log(to) - std::log(from))) : from + t * (to - from);
  }
  return g;
}

inline std::vector<double> parse_grid_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid grid value '" + item + "'");
    }
  }
  return out;
}

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw UsageError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw UsageError("sweep grid must be strictly increasing");
  }
}

namespace detail {

inline void add_common_meta(CsvTable& t, const ExperimentSpec& spec) {
  t.add_meta("tool", "mimo-gt");
  t.add_meta("command", to_string(spec.command));
  t.add_meta("seed", std::to_string(spec.params.seed));
  t.add_meta("params_hash", format_hex(params_hash(spec.params)));
}

inline void emit_csv(const ExperimentSpec& spec, const CsvTable& table, std::ostream& out) {
  if (spec.output.empty()) {
    if (!spec.json) out << '\n' << table.str();
    return;
  }
  std::ofstream f(spec.output, std::ios::binary);
  if (!f) throw UsageError("cannot write output file '" + spec.output + "'");
  f << table.str();
}

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

using Listing = std::vector<std::pair<std::string, double>>;

inline int emit_listing(const ExperimentSpec& spec, const Listing& items,
                        const std::vector<std::pair<std::string, std::string>>& notes, std::ostream& out) {
  CsvTable table({"quantity", "value"});
  add_common_meta(table, spec);
  for (const auto& [k, v] : items) table.add_row({k, format_number(v)});
  if (spec.json) {
    nlohmann::json j;
    for (const auto& [k, v] : items) j[k] = json_number(v);
    for (const auto& [k, v] : notes) j[k] = v;
    out << j.dump(2) << '\n';
  } else {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [k, v] : items) rows.emplace_back(k, format_number(v));
    for (const auto& n : notes) rows.push_back(n);
    out << format_aligned(rows);
  }
  emit_csv(spec, table, out);
  return kExitOk;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// analyze

inline int cmd_analyze(const ExperimentSpec& spec, std::ostream& out) {
  const auto p = validate(spec.params);
  const auto k = p.k_active;
  const auto nm = p.codebook_size();
  const auto cp = crossover_probs(k, p.bernoulli_p, p.snr, p.threshold_gamma);
  detail::Listing items = {
      {"snr", p.snr},
      {"snr_db", linear_to_db(p.snr)},
      {"q01", cp.q01},
      {"q10", cp.q10},
      {"p0", cp.p0},
      {"p1", cp.p1},
      {"delta_upper_limit", delta_upper_limit(cp.p0, cp.q10)},
  };
  std::vector<std::pair<std::string, std::string>> notes;
  if (cp.q10 > 0.0 && cp.p0 >= cp.q10) items.emplace_back("delta_star", delta_star(cp.p0, cp.q10));
  const auto bp = beta_pair(k, p.bernoulli_p, cp.q10, cp.p0, p.relax_delta);
  items.emplace_back("beta1", bp.beta1);
  items.emplace_back("beta2", bp.beta2);
  items.emplace_back("beta_objective", beta_objective(k, p.bernoulli_p, p.threshold_gamma, p.snr));
  items.emplace_back("pmd_bound", clamp_probability(pmd_upper_bound(k, p.bernoulli_p, p.m_rx, cp.q10, p.relax_delta)));
  if (p.relax_delta < delta_upper_limit(cp.p0, cp.q10)) {
    items.emplace_back("pfa_bound",
                       clamp_probability(pfa_upper_bound(nm, k, p.bernoulli_p, p.m_rx, cp.p0, cp.q10, p.relax_delta)));
  } else {
    notes.emplace_back("pfa_bound", "n/a (relax_delta >= p0/q10 - 1)");
  }
  items.emplace_back("target_error", std::pow(static_cast<double>(nm), -p.margin_delta));
  items.emplace_back("bac_capacity", bac_capacity(cp.q01, cp.q10));
  items.emplace_back("converse_m_r", converse_min_antennas(p.n_users, p.msgs_per_user, k, 0.0, cp.q01, cp.q10));

  const auto opt = optimize_beta_star(k, p.snr);
  const auto m_r = required_antennas(p.n_users, p.msgs_per_user, k, p.margin_delta, opt.beta_star);
  const auto rt = rates(k, p.n_users, p.msgs_per_user, m_r, p.margin_delta, opt.beta_star, p.snr);
  items.emplace_back("beta_star", opt.beta_star);
  items.emplace_back("required_m_r", static_cast<double>(m_r));
  items.emplace_back("tightness_ratio", tightness_ratio(p.n_users, p.msgs_per_user, k, p.margin_delta,
                                                        opt.beta_star, opt.q01, opt.q10));
  items.emplace_back("sum_rate", rt.sum_rate);
  items.emplace_back("spectral_efficiency", rt.spectral_efficiency);
  items.emplace_back("ratio_full_csi_leading", rt.ratio_full_csi_leading);
  items.emplace_back("ratio_rr", rt.ratio_rr);
  notes.emplace_back("ratio_full_csi_remainder", rate_remainder_annotation());
  return detail::emit_listing(spec, items, notes, out);
}

// ---------------------------------------------------------------------------
// optimize

inline int cmd_optimize(const ExperimentSpec& spec, std::ostream& out) {
  const auto p = validate(spec.params);
  const auto r = optimize_beta_star(p.k_active, p.snr);
  const auto m_r = required_antennas(p.n_users, p.msgs_per_user, p.k_active, p.margin_delta, r.beta_star);
  detail::Listing items = {
      {"k_active", static_cast<double>(r.k)},
      {"snr", r.rho},
      {"p_star", r.p_star},
      {"alpha_star", r.alpha_star},
      {"gamma_star", r.gamma_star},
      {"delta_star", r.delta_star},
      {"beta_star", r.beta_star},
      {"q01", r.q01},
      {"q10", r.q10},
      {"p0", r.p0},
      {"beta1", r.beta1},
      {"beta2", r.beta2},
      {"df_at_gamma_star", r.df_at_gamma},
      {"d2f_at_gamma_star", r.d2f_at_gamma},
      {"equalizer_residual", r.equalizer_residual},
      {"golden_iterations", static_cast<double>(r.golden_iterations)},
      {"bisection_iterations", static_cast<double>(r.bisection_iterations)},
      {"required_m_r", static_cast<double>(m_r)},
  };
  return detail::emit_listing(spec, items, {}, out);
}

// ---------------------------------------------------------------------------
// simulate

struct DesignPoint {
  SystemParams params;  // p, γ, Δ and antenna counts set to the design
  std::size_t m_r = 0;
  double q10 = 0.0;
  double p0 = 0.0;
  double q01 = 0.0;
};

/// Optimiser design (p*, γ*, Δ*) with M_r from the antenna-scaling theorem.
inline DesignPoint optimal_design(const SystemParams& raw) {
  auto p = validate(raw);
  const auto r = optimize_beta_star(p.k_active, p.snr);
  DesignPoint d;
  d.m_r = required_antennas(p.n_users, p.msgs_per_user, p.k_active, p.margin_delta, r.beta_star);
  p.bernoulli_p = r.p_star;
  p.threshold_gamma = r.gamma_star;
  p.relax_delta = r.delta_star;
  p.m_rx = d.m_r;
  if (!p.allow_antenna_mismatch) p.m_tx = d.m_r;
  d.params = validate(p);
  d.q10 = r.q10;
  d.q01 = r.q01;
  d.p0 = r.p0;
  return d;
}

inline DesignPoint config_design(const SystemParams& raw) {
  const auto p = validate(raw);
  const auto cp = crossover_probs(p.k_active, p.bernoulli_p, p.snr, p.threshold_gamma);
  return {p, p.m_rx, cp.q10, cp.p0, cp.q01};
}

inline int cmd_simulate(const ExperimentSpec& spec, std::ostream& out) {
  if (spec.trials == 0) throw UsageError("trials must be positive");
  if (spec.trials < 1000) throw UsageError("simulate needs at least 1000 trials");
  const auto design = spec.use_config_design ? config_design(spec.params) : optimal_design(spec.params);
  const auto& p = design.params;
  const auto nm = p.codebook_size();

  RunOptions opts;
  opts.workers = spec.workers;
  opts.codebook_mode = spec.codebook_mode;
  std::ofstream dump;
  if (!spec.dump_path.empty()) {
    dump.open(spec.dump_path, std::ios::binary);
    if (!dump) throw UsageError("cannot write dump file '" + spec.dump_path + "'");
    opts.dump = &dump;
  }
  const auto est = estimate_error_rates(p, design.m_r, spec.trials, opts);

  const double target = std::pow(static_cast<double>(nm), -p.margin_delta);
  const double pmd_b = pmd_upper_bound(p.k_active, p.bernoulli_p, design.m_r, design.q10, p.relax_delta);
  const bool pfa_ok = p.relax_delta < delta_upper_limit(design.p0, design.q10);
  const double pfa_b = pfa_ok ? pfa_upper_bound(nm, p.k_active, p.bernoulli_p, design.m_r, design.p0, design.q10,
                                                p.relax_delta)
                              : kInf;
  const double worst_high = std::max(est.pmd.ci_high, est.pfa.ci_high);
  const bool pass = worst_high <= target;

  CsvTable table({"metric", "params_hash", "trials", "estimate", "ci_low", "ci_high", "analytic", "bound"});
  detail::add_common_meta(table, spec);
  table.add_meta("m_r", std::to_string(design.m_r));
  table.add_meta("bernoulli_p", format_number(p.bernoulli_p));
  table.add_meta("threshold_gamma", format_number(p.threshold_gamma));
  table.add_meta("relax_delta", format_number(p.relax_delta));
  table.add_meta("codebook_mode", spec.codebook_mode == CodebookMode::fresh ? "fresh" : "fixed");
  const auto hash = format_hex(params_hash(p));
  auto row = [&](const std::string& name, const EstimateWithCI& e, double bound) {
    table.add_row({name, hash, std::to_string(e.trials), format_number(e.point), format_number(e.ci_low),
                   format_number(e.ci_high), format_number(target), format_number(clamp_probability(bound))});
  };
  row("pmd", est.pmd, pmd_b);
  row("pfa", est.pfa, pfa_b);
  row("pe", est.pe, pmd_b + pfa_b);

  if (spec.json) {
    nlohmann::json j;
    j["m_r"] = design.m_r;
    j["trials"] = est.rounds;
    j["pmd"] = {{"estimate", est.pmd.point}, {"ci_low", est.pmd.ci_low}, {"ci_high", est.pmd.ci_high},
                {"bound", detail::json_number(pmd_b)}};
    j["pfa"] = {{"estimate", est.pfa.point}, {"ci_low", est.pfa.ci_low}, {"ci_high", est.pfa.ci_high},
                {"bound", detail::json_number(pfa_b)}};
    j["pe"] = {{"estimate", est.pe.point}, {"ci_low", est.pe.ci_low}, {"ci_high", est.pe.ci_high}};
    j["target"] = target;
    j["zero_codeword_users"] = est.zero_codeword_users;
    j["verdict"] = pass ? "PASS" : "FAIL";
    out << j.dump(2) << '\n';
  } else {
    out << format_aligned({
        {"m_r", std::to_string(design.m_r)},
        {"bernoulli_p", format_number(p.bernoulli_p)},
        {"threshold_gamma", format_number(p.threshold_gamma)},
        {"relax_delta", format_number(p.relax_delta)},
        {"decoder_q10", format_number(est.decoder_q10)},
        {"trials", std::to_string(est.rounds)},
        {"pmd", format_number(est.pmd.point) + " [" + format_number(est.pmd.ci_low) + ", " +
                    format_number(est.pmd.ci_high) + "]"},
        {"pfa", format_number(est.pfa.point) + " [" + format_number(est.pfa.ci_low) + ", " +
                    format_number(est.pfa.ci_high) + "]"},
        {"pmd_bound", format_number(clamp_probability(pmd_b))},
        {"pfa_bound", format_number(clamp_probability(pfa_b))},
        {"zero_codeword_users", std::to_string(est.zero_codeword_users)},
    });
    out << (pass ? "PASS" : "FAIL") << ": max{pMD, pFA} upper 99% edge " << format_number(worst_high)
        << (pass ? " <= " : " > ") << "(NM)^-delta = " << format_number(target) << '\n';
  }
  detail::emit_csv(spec, table, out);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  double value = 0.0;
  std::size_t n_users = 0;
  std::size_t k_active = 0;
  double snr = 0.0;
  double alpha = 0.0;
  double p = 0.0;
  double gamma = 0.0;
  double delta_star = 0.0;
  double beta = 0.0;
  std::size_t m_r = 0;
  double pmd_bound = 0.0;
  double pfa_bound = 0.0;
  double max_bound = 0.0;
  double target = 0.0;
  double sum_rate = 0.0;
  double spectral_efficiency = 0.0;
  double ratio_full_csi = 0.0;
  double ratio_rr = 0.0;
  double converse_m_r = 0.0;
  double tightness = 0.0;
};

inline std::vector<std::string> sweep_columns() {
  return {"axis",      "value",     "n_users",   "k_active",   "snr",      "alpha",
          "p",         "gamma",     "delta_star", "beta",      "m_r",      "pmd_bound",
          "pfa_bound", "max_bound", "target",    "sum_rate",   "spectral_efficiency",
          "ratio_full_csi", "ratio_rr", "converse_m_r", "tightness"};
}

/// Evaluates one grid point. The γ axis holds p at the configured value and
/// evaluates the equaliser objective at the swept γ; all other axes use the
/// optimiser's (p*, γ*, Δ*).
inline SweepRow sweep_point(const SystemParams& base, SweepAxis axis, double value, std::optional<double> epsilon,
                            std::map<std::pair<std::size_t, double>, OptimizationResult>& cache) {
  SystemParams p = base;
  switch (axis) {
    case SweepAxis::rho:
      if (!(value > 0.0)) throw UsageError("rho grid values must be positive");
      p.noise = p.power / value;
      break;
    case SweepAxis::k: {
      if (value < 1.0 || value != std::floor(value)) throw UsageError("k grid values must be positive integers");
      p.k_active = static_cast<std::size_t>(value);
      if (epsilon) {
        if (!(*epsilon > 0.0 && *epsilon <= 1.0)) throw UsageError("epsilon must lie in (0, 1]");
        p.n_users = static_cast<std::size_t>(std::ceil(std::pow(value, 1.0 / *epsilon) - 1e-9));
      }
      break;
    }
    case SweepAxis::n:
      if (value < 1.0 || value != std::floor(value)) throw UsageError("n grid values must be positive integers");
      p.n_users = static_cast<std::size_t>(value);
      break;
    case SweepAxis::gamma:
      if (!(value > 0.0)) throw UsageError("gamma grid values must be positive");
      p.threshold_gamma = value;
      break;
    case SweepAxis::delta:
      if (!(value >= 0.0)) throw UsageError("delta grid values must be nonnegative");
      p.margin_delta = value;
      break;
  }
  p = validate(p);
  const auto k = p.k_active;
  const auto nm = p.codebook_size();

  SweepRow row;
  row.value = value;
  row.n_users = p.n_users;
  row.k_active = k;
  row.snr = p.snr;
  double q01 = 0.0, q10 = 0.0, p0 = 0.0;
  if (axis == SweepAxis::gamma) {
    row.p = p.bernoulli_p;
    row.alpha = p.bernoulli_p * static_cast<double>(k);
    row.gamma = p.threshold_gamma;
    row.beta = beta_objective(k, row.p, row.gamma, p.snr);
    const auto cp = crossover_probs(k, row.p, p.snr, row.gamma);
    q01 = cp.q01;
    q10 = cp.q10;
    p0 = cp.p0;
    row.delta_star = delta_star(p0, q10);
  } else {
    const auto key = std::make_pair(k, p.snr);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, optimize_beta_star(k, p.snr)).first;
    const auto& r = it->second;
    row.p = r.p_star;
    row.alpha = r.alpha_star;
    row.gamma = r.gamma_star;
    row.beta = r.beta_star;
    row.delta_star = r.delta_star;
    q01 = r.q01;
    q10 = r.q10;
    p0 = r.p0;
  }
  row.m_r = required_antennas(p.n_users, p.msgs_per_user, k, p.margin_delta, row.beta);
  row.pmd_bound = pmd_upper_bound(k, row.p, row.m_r, q10, row.delta_star);
  row.pfa_bound = pfa_upper_bound(nm, k, row.p, row.m_r, p0, q10, row.delta_star);
  row.max_bound = std::max(row.pmd_bound, row.pfa_bound);
  row.target = std::pow(static_cast<double>(nm), -p.margin_delta);
  const auto rt = rates(k, p.n_users, p.msgs_per_user, row.m_r, p.margin_delta, row.beta, p.snr);
  row.sum_rate = rt.sum_rate;
  row.spectral_efficiency = rt.spectral_efficiency;
  row.ratio_full_csi = rt.ratio_full_csi_leading;
  row.ratio_rr = rt.ratio_rr;
  row.converse_m_r = converse_min_antennas(p.n_users, p.msgs_per_user, k, 0.0, q01, q10);
  row.tightness = tightness_ratio(p.n_users, p.msgs_per_user, k, p.margin_delta, row.beta, q01, q10);
  return row;
}

inline std::vector<std::string> sweep_cells(SweepAxis axis, const SweepRow& r) {
  return {to_string(axis),
          format_number(r.value),
          format_number(r.n_users),
          format_number(r.k_active),
          format_number(r.snr),
          format_number(r.alpha),
          format_number(r.p),
          format_number(r.gamma),
          format_number(r.delta_star),
          format_number(r.beta),
          format_number(r.m_r),
          format_number(r.pmd_bound),
          format_number(r.pfa_bound),
          format_number(r.max_bound),
          format_number(r.target),
          format_number(r.sum_rate),
          format_number(r.spectral_efficiency),
          format_number(r.ratio_full_csi),
          format_number(r.ratio_rr),
          format_number(r.converse_m_r),
          format_number(r.tightness)};
}

inline const std::vector<std::string>& sweep_series() {
  static const std::vector<std::string> s = {"beta",     "m_r",            "max_bound", "spectral_efficiency",
                                             "ratio_full_csi", "ratio_rr", "converse_m_r", "tightness"};
  return s;
}

/// "<dir>/<stem>_<series>.dat" next to the CSV output.
inline std::string series_path(const std::string& output, const std::string& series) {
  const auto slash = output.find_last_of('/');
  const auto dot = output.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? output.substr(0, dot) : output) + "_" + series + ".dat";
}

inline int cmd_sweep(const ExperimentSpec& spec, std::ostream& out) {
  if (!spec.sweep) throw UsageError("sweep needs an axis and a grid");
  const auto& sw = *spec.sweep;
  check_grid(sw.grid);
  const auto base = validate(spec.params);

  // Grid points are independent; evaluate them in parallel and keep grid order.
  std::vector<SweepRow> rows(sw.grid.size());
  parallel_for(sw.grid.size(), spec.workers, [&](std::size_t i) {
    std::map<std::pair<std::size_t, double>, OptimizationResult> cache;
    rows[i] = sweep_point(base, sw.axis, sw.grid[i], sw.epsilon, cache);
  });

  CsvTable table(sweep_columns());
  detail::add_common_meta(table, spec);
  table.add_meta("axis", to_string(sw.axis));
  if (sw.epsilon) table.add_meta("epsilon", format_number(*sw.epsilon));
  table.add_meta("ratio_full_csi_remainder", rate_remainder_annotation());
  for (const auto& r : rows) table.add_row(sweep_cells(sw.axis, r));

  if (spec.json) {
    nlohmann::json arr = nlohmann::json::array();
    const auto cols = sweep_columns();
    for (const auto& cells : table.rows()) {
      nlohmann::json o;
      for (std::size_t c = 0; c < cols.size(); ++c) o[cols[c]] = cells[c];
      arr.push_back(o);
    }
    out << arr.dump(2) << '\n';
  } else {
    out << "sweep over " << to_string(sw.axis) << ": " << rows.size() << " points\n";
    for (const auto& r : rows) {
      out << "  " << to_string(sw.axis) << '=' << format_number(r.value) << "  beta=" << format_number(r.beta)
          << "  m_r=" << r.m_r << "  max_bound=" << format_number(r.max_bound)
          << "  target=" << format_number(r.target) << '\n';
    }
  }
  detail::emit_csv(spec, table, out);

  if (!spec.output.empty()) {
    const auto cols = sweep_columns();
    for (const auto& series : sweep_series()) {
      const auto col = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), series) - cols.begin());
      std::ofstream f(series_path(spec.output, series), std::ios::binary);
      if (!f) throw UsageError("cannot write series file for '" + series + "'");
      f << "# seed: " << spec.params.seed << '\n' << "# " << to_string(sw.axis) << ' ' << series << '\n';
      for (const auto& cells : table.rows()) f << cells[1] << ' ' << cells[col] << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct CheckResult {
  std::string group;
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  bool passed = false;
};

/// Brute-force reading of the Noisy CoMa decision rule, one bit at a time.
inline std::vector<std::size_t> reference_decode(const BinaryResultVector& y, const Codebook& cb, double q10,
                                                 double delta) {
  std::vector<std::size_t> accepted;
  for (std::size_t j = 0; j < cb.size(); ++j) {
    std::size_t t = 0, s = 0;
    for (std::size_t i = 0; i < cb.code_len(); ++i) {
      if (cb.word(j).test(i)) {
        ++t;
        if (y.test(i)) ++s;
      }
    }
    if (t > 0 && static_cast<double>(s) >= static_cast<double>(t) * (1.0 - q10 * (delta + 1.0))) {
      accepted.push_back(j);
    }
  }
  return accepted;
}

inline const std::vector<std::string>& verify_groups() {
  static const std::vector<std::string> g = {"energy", "crossover", "optimizer", "bounds", "decoder", "converse"};
  return g;
}

/// `scale` is the Monte Carlo size (energy samples per J, crossover rounds).
/// The energy mean tolerance is 1%, widened to 4 standard errors when the
/// sample count is too small for 1% to be meaningful.
inline std::vector<CheckResult> run_checks(const std::string& group, std::size_t scale, std::uint64_t seed,
                                           unsigned workers) {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double measured, double limit, bool passed) {
    out.push_back({group, std::move(name), measured, limit, passed});
  };

  if (group == "energy") {
    const auto rows = energy_moment_check({0, 1, 2, 5}, 1.0, 0.5, scale, seed, workers);
    const double tol = std::max(0.01, 4.0 / std::sqrt(static_cast<double>(scale)));
    for (const auto& r : rows) {
      const auto j = std::to_string(r.j);
      add("mean_rel_error_J" + j, r.relative_error, tol, r.relative_error <= tol);
      add("ks_J" + j, r.ks, r.ks_critical, r.ks < r.ks_critical);
    }
  } else if (group == "crossover") {
    SystemParams p;
    p.n_users = 3;
    p.msgs_per_user = 1;
    p.k_active = 3;
    p.m_rx = p.m_tx = 16;
    p.power = 1.0;
    p.noise = 0.1;
    p.bernoulli_p = 0.3;
    p.threshold_gamma = 1.0;
    p.seed = seed;
    RunOptions opts;
    opts.workers = workers;
    const auto est = estimate_crossovers(p, std::max<std::size_t>(scale, 1000), opts);
    const auto cp = crossover_probs(3, 0.3, 10.0, 1.0);
    add("q01_in_ci", cp.q01, est.q01.point, est.q01.contains(cp.q01));
    add("q10_in_ci", cp.q10, est.q10.point, est.q10.contains(cp.q10));
  } else if (group == "optimizer") {
    for (std::size_t k : {2, 5}) {
      const auto r = optimize_beta_star(k, 10.0);
      const auto ks = std::to_string(k);
      add("equalizer_K" + ks, r.equalizer_residual, 1e-9, r.equalizer_residual <= 1e-9);
      add("stationarity_K" + ks, std::abs(r.df_at_gamma), 1e-12, std::abs(r.df_at_gamma) <= 1e-12);
      add("curvature_K" + ks, r.d2f_at_gamma, 0.0, r.d2f_at_gamma > 0.0);
      add("alpha_bound_K" + ks, r.alpha_star, std::numbers::e - 1.0, r.alpha_star <= std::numbers::e - 1.0);
    }
    for (double rho : {0.1, 1.0, 10.0}) {
      const double closed = (rho + 1.0) * std::log1p(rho) / rho;
      const double err = std::abs(gamma_star(1, 0.25, rho) - closed);
      add("gamma_closed_form_rho" + format_number(rho), err, 1e-8, err <= 1e-8);
    }
  } else if (group == "bounds") {
    for (std::size_t k : {2, 3, 10}) {
      for (double rho : {0.5, 1.0, 2.0}) {
        const auto r = optimize_beta_star(k, rho);
        const auto tag = "_K" + std::to_string(k) + "_rho" + format_number(rho);
        add("beta_star_at_least_one" + tag, r.beta_star, 1.0, r.beta_star >= 1.0);
        if (r.gamma_star >= 1.0 && r.gamma_star <= std::max(1.0, rho)) {
          const double ub = beta_star_upper_bound(r.alpha_star, rho);
          add("beta_star_upper_bound" + tag, r.beta_star, ub, r.beta_star <= ub);
        }
      }
    }
    for (double alpha : {0.25, 1.0, 1.7}) {
      for (std::size_t k : {2, 5, 50, 1000}) {
        const double mid = std::pow(1.0 - alpha / static_cast<double>(k), 2.0 * static_cast<double>(k));
        const double lo = std::pow(1.0 - alpha / 2.0, 4);
        const double hi = std::exp(-2.0 * alpha);
        add("power_bracket_a" + format_number(alpha) + "_K" + std::to_string(k), mid, hi,
            lo <= mid * (1 + 1e-12) && mid <= hi * (1 + 1e-12));
      }
    }
    const double exact = q10_analytic(500, 1.0 / 500.0, 1.0, 1.0);
    const double limit = q10_poisson_limit(1.0, 1.0, 1.0).value;
    add("poisson_limit_K500", std::abs(exact - limit), 0.005, std::abs(exact - limit) <= 0.005);
  } else if (group == "decoder") {
    std::size_t mismatches = 0;
    SystemParams p;
    p.n_users = 6;
    p.msgs_per_user = 2;
    p.k_active = 2;
    p.m_rx = p.m_tx = 10;
    p.bernoulli_p = 0.3;
    for (std::size_t c = 0; c < 20; ++c) {
      auto rng = make_stream(seed, StreamTag::misc, c);
      const auto cb = generate_codebook(p, rng);
      for (std::uint64_t y_bits = 0; y_bits < (1U << 10); ++y_bits) {
        BitVector y(10);
        for (std::size_t i = 0; i < 10; ++i) y.set(i, (y_bits >> i) & 1U);
        if (noisy_coma_decode(y, cb, 0.2, 1.0).accepted != reference_decode(y, cb, 0.2, 1.0)) ++mismatches;
      }
    }
    add("oracle_mismatches", static_cast<double>(mismatches), 0.0, mismatches == 0);
  } else if (group == "converse") {
    for (double q : {0.05, 0.11, 0.3}) {
      const double err = std::abs(bac_capacity(q, q) - (1.0 - binary_entropy(q)));
      add("bsc_reduction_q" + format_number(q), err, 1e-12, err <= 1e-12);
    }
    const double m = converse_min_antennas(4, 2, 2, 0.0, 0.0, 0.0);
    add("noiseless_converse", m, 4.0, m == 4.0);
  } else {
    throw UsageError("unknown verify group '" + group + "'");
  }
  return out;
}

inline int cmd_verify(const ExperimentSpec& spec, std::ostream& out) {
  std::vector<std::string> groups;
  if (spec.only.empty()) groups = verify_groups();
  else groups = {spec.only};
  std::vector<CheckResult> results;
  for (const auto& g : groups) {
    auto r = run_checks(g, spec.trials, spec.params.seed, spec.workers);
    results.insert(results.end(), r.begin(), r.end());
  }
  bool all = true;
  CsvTable table({"group", "check", "measured", "limit", "passed"});
  detail::add_common_meta(table, spec);
  for (const auto& r : results) {
    all = all && r.passed;
    table.add_row({r.group, r.name, format_number(r.measured), format_number(r.limit), r.passed ? "1" : "0"});
  }
  if (spec.json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
      arr.push_back({{"group", r.group}, {"check", r.name}, {"measured", detail::json_number(r.measured)},
                     {"limit", detail::json_number(r.limit)}, {"passed", r.passed}});
    }
    out << arr.dump(2) << '\n';
  } else {
    for (const auto& r : results) {
      out << (r.passed ? "PASS " : "FAIL ") << r.group << '/' << r.name << "  measured=" << format_number(r.measured)
          << "  limit=" << format_number(r.limit) << '\n';
    }
    out << (all ? "all checks passed" : "some checks FAILED") << '\n';
  }
  detail::emit_csv(spec, table, out);
  return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

/// Dispatches `spec.command`, mapping configuration and usage errors to exit
/// code 2 with a message on `err`.
inline int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    switch (spec.command) {
      case Command::analyze: return cmd_analyze(spec, out);
      case Command::optimize: return cmd_optimize(spec, out);
      case Command::simulate: return cmd_simulate(spec, out);
      case Command::sweep: return cmd_sweep(spec, out);
      case Command::verify: return cmd_verify(spec, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const AnalysisError& e) {
    err << "analysis error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace mimogt::cli

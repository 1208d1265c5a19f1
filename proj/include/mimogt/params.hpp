#pragma once

// System parameters shared by every module, plus the key=value config format.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimogt {

/// Raised for invalid parameter sets and malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All scalar parameters of the model. Linear units throughout; dB only
/// appears at the config/CLI boundary. `power` and `noise` are the source of
/// truth; `snr` is a cached ratio refreshed by validate().
struct SystemParams {
  std::size_t n_users = 16;       // N
  std::size_t msgs_per_user = 2;  // codebook size per user
  std::size_t k_active = 2;       // K
  std::size_t m_tx = 64;          // transmit antennas per user
  std::size_t m_rx = 64;          // receive antennas (codeword length)
  double power = 1.0;             // P [W]
  double noise = 0.1;             // N0 [W]
  double snr = 10.0;              // P / N0, derived
  double bernoulli_p = 0.25;      // probability of a '1' codeword bit
  double threshold_gamma = 1.0;   // energy threshold, normalised by N0
  double relax_delta = 0.5;       // decoder relaxation
  double margin_delta = 0.5;      // error-exponent margin
  std::uint64_t seed = 1;
  // M_t != M_r is outside the analysed regime and must be asked for.
  bool allow_antenna_mismatch = false;

  [[nodiscard]] std::size_t codebook_size() const { return n_users * msgs_per_user; }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

/// Checks every invariant and returns a copy with `snr` recomputed.
/// Idempotent.
inline SystemParams validate(SystemParams params) {
  if (params.n_users == 0) throw ConfigError("n_users must be positive");
  if (params.msgs_per_user == 0) throw ConfigError("msgs_per_user must be positive");
  if (params.k_active == 0) throw ConfigError("k_active must be positive");
  if (params.k_active > params.n_users) throw ConfigError("K exceeds N");
  if (params.m_tx == 0 || params.m_rx == 0) throw ConfigError("antenna counts must be positive");
  if (params.m_tx != params.m_rx && !params.allow_antenna_mismatch) {
    throw ConfigError("m_tx differs from m_rx; set allow_antenna_mismatch=true to override");
  }
  if (!(params.power > 0.0) || !std::isfinite(params.power)) {
    throw ConfigError("power must be positive and finite");
  }
  if (!(params.noise > 0.0) || !std::isfinite(params.noise)) {
    throw ConfigError("noise must be positive and finite");
  }
  if (!(params.bernoulli_p > 0.0 && params.bernoulli_p < 1.0)) {
    throw ConfigError("bernoulli_p must lie in (0, 1)");
  }
  if (!(params.threshold_gamma >= 0.0) || !std::isfinite(params.threshold_gamma)) {
    throw ConfigError("threshold_gamma must be nonnegative");
  }
  if (!(params.relax_delta > 0.0) || !std::isfinite(params.relax_delta)) {
    throw ConfigError("relax_delta must be positive");
  }
  if (!(params.margin_delta >= 0.0) || !std::isfinite(params.margin_delta)) {
    throw ConfigError("margin_delta must be nonnegative");
  }
  params.snr = params.power / params.noise;
  return params;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for '" + key + "': '" + value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + value + "'");
}

}  // namespace detail

/// Documented config keys, in canonical order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "n_users",     "msgs_per_user",   "k_active",    "m_tx",
      "m_rx",        "power",           "noise",       "snr_db",
      "bernoulli_p", "threshold_gamma", "relax_delta", "margin_delta",
      "seed",        "allow_antenna_mismatch"};
  return keys;
}

/// Applies key=value settings on top of `base` and validates the result.
///
/// Rules: unknown or repeated keys are errors; `snr_db` fixes N0 = P / 10^(snr_db/10)
/// after all other keys and conflicts with an explicit `noise`; when only
/// `m_rx` is given, `m_tx` follows it.
inline SystemParams apply_settings(SystemParams base,
                                   const std::vector<std::pair<std::string, std::string>>& settings) {
  std::map<std::string, std::string> seen;
  for (const auto& [key, value] : settings) {
    bool known = false;
    for (const auto& k : config_keys()) known = known || (k == key);
    if (!known) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.emplace(key, value).second) throw ConfigError("duplicate config key '" + key + "'");
  }
  if (seen.count("noise") && seen.count("snr_db")) {
    throw ConfigError("'noise' and 'snr_db' are mutually exclusive");
  }
  for (const auto& [key, value] : seen) {
    if (key == "n_users") base.n_users = detail::parse_count(key, value);
    else if (key == "msgs_per_user") base.msgs_per_user = detail::parse_count(key, value);
    else if (key == "k_active") base.k_active = detail::parse_count(key, value);
    else if (key == "m_tx") base.m_tx = detail::parse_count(key, value);
    else if (key == "m_rx") base.m_rx = detail::parse_count(key, value);
    else if (key == "power") base.power = detail::parse_real(key, value);
    else if (key == "noise") base.noise = detail::parse_real(key, value);
    else if (key == "bernoulli_p") base.bernoulli_p = detail::parse_real(key, value);
    else if (key == "threshold_gamma") base.threshold_gamma = detail::parse_real(key, value);
    else if (key == "relax_delta") base.relax_delta = detail::parse_real(key, value);
    else if (key == "margin_delta") base.margin_delta = detail::parse_real(key, value);
    else if (key == "seed") base.seed = detail::parse_count(key, value);
    else if (key == "allow_antenna_mismatch") base.allow_antenna_mismatch = detail::parse_bool(key, value);
  }
  if (seen.count("m_rx") && !seen.count("m_tx")) base.m_tx = base.m_rx;
  if (auto it = seen.find("snr_db"); it != seen.end()) {
    base.noise = base.power / db_to_linear(detail::parse_real(it->first, it->second));
  }
  return validate(base);
}

/// Parses `key = value` lines. Blank lines and lines starting with '#' are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_lines(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    auto key = detail::trim(line.substr(0, eq));
    auto value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline SystemParams parse_config(std::istream& in, const SystemParams& defaults = {}) {
  return apply_settings(defaults, parse_config_lines(in));
}

inline SystemParams load_config(const std::string& path, const SystemParams& defaults = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, defaults);
}

inline std::string format_real_exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Canonical serialisation; parse_config(to_config_string(p)) reproduces p.
inline std::string to_config_string(const SystemParams& p) {
  std::ostringstream os;
  os << "n_users=" << p.n_users << '\n'
     << "msgs_per_user=" << p.msgs_per_user << '\n'
     << "k_active=" << p.k_active << '\n'
     << "m_tx=" << p.m_tx << '\n'
     << "m_rx=" << p.m_rx << '\n'
     << "power=" << format_real_exact(p.power) << '\n'
     << "noise=" << format_real_exact(p.noise) << '\n'
     << "bernoulli_p=" << format_real_exact(p.bernoulli_p) << '\n'
     << "threshold_gamma=" << format_real_exact(p.threshold_gamma) << '\n'
     << "relax_delta=" << format_real_exact(p.relax_delta) << '\n'
     << "margin_delta=" << format_real_exact(p.margin_delta) << '\n'
     << "seed=" << p.seed << '\n'
     << "allow_antenna_mismatch=" << (p.allow_antenna_mismatch ? "true" : "false") << '\n';
  return os.str();
}

/// FNV-1a over the canonical serialisation.
inline std::uint64_t params_hash(const SystemParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_string(p)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mimogt

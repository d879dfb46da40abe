#ifndef GHZDD_IO_HPP
#define GHZDD_IO_HPP

#include <array>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ghzdd/core.hpp"
#include "ghzdd/metrics.hpp"
#include "ghzdd/mixed_state.hpp"
#include "ghzdd/search.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* tool_version = "1.0.0";

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Rounds to 12 significant digits; nlohmann emits the shortest round-trip form of the result.
inline double round12(double v) { return std::strtod(fmt12(v).c_str(), nullptr); }

inline json round12(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(round12(x));
  return a;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw config_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw config_error("cannot write " + p.string());
  out << s;
}

inline json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw config_error(p.string() + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Register CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw config_error(where + ": non-numeric field '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads `label,A_kHz,B_kHz`; couplings are converted to rad/s.
inline Register parse_register_csv(const std::string& text, const std::string& name, double omega_larmor) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  Register reg;
  reg.omega_larmor = omega_larmor;
  std::set<std::string> labels;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (!header) {
      if (f != std::vector<std::string>{"label", "A_kHz", "B_kHz"})
        throw config_error(where + ": expected header 'label,A_kHz,B_kHz'");
      header = true;
      continue;
    }
    if (f.size() != 3) throw config_error(where + ": expected 3 fields, found " + std::to_string(f.size()));
    if (f[0].empty()) throw config_error(where + ": empty label");
    if (!labels.insert(f[0]).second) throw config_error(where + ": duplicate label " + f[0]);
    const double a = detail::parse_number(f[1], where), b = detail::parse_number(f[2], where);
    if (b < 0.0) throw config_error(where + ": B_kHz must be non-negative");
    reg.spins.push_back({f[0], a * kilohertz, b * kilohertz});
  }
  if (!header) throw config_error(name + ": empty register file");
  if (reg.spins.empty()) throw config_error(name + ": register has no spins");
  reg.validate();
  return reg;
}

inline Register load_register(const fs::path& path, double omega_larmor = default_omega_larmor) {
  return parse_register_csv(read_text(path), path.string(), omega_larmor);
}

// ---------------------------------------------------------------------------
// Units and plans
// ---------------------------------------------------------------------------

inline SequenceUnit parse_unit(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "CPMG") return SequenceUnit::cpmg();
    if (s.rfind("UDD", 0) == 0 && s.size() > 3) {
      int n = 0;
      try {
        n = std::stoi(s.substr(3));
      } catch (...) {
        throw config_error("bad UDD order in unit '" + s + "'");
      }
      auto u = SequenceUnit::udd(n);
      u.validate();
      return u;
    }
    throw config_error("unknown unit '" + s + "' (expected CPMG, UDD<n> or {\"custom\": [...]})");
  }
  if (j.is_object() && j.contains("custom") && j.size() == 1) {
    auto u = SequenceUnit::custom(j.at("custom").get<std::vector<double>>());
    u.validate();
    return u;
  }
  throw config_error("unit must be a string or {\"custom\": [fractions]}");
}

inline json unit_to_json(const SequenceUnit& u) {
  if (u.kind == UnitKind::custom) return json{{"custom", u.pulse_fractions}};
  return u.name();
}

inline json plan_to_json(const SequencePlan& p) {
  json blocks = json::array();
  for (const auto& b : p.blocks)
    blocks.push_back({{"unit", unit_to_json(b.unit)}, {"t_us", round12(b.t / microsecond)}, {"t_s", b.t}, {"N", b.N}});
  return {{"blocks", blocks}, {"T_ms", round12(p.total_time() * 1e3)}};
}

inline SequencePlan plan_from_json(const json& j) {
  SequencePlan p;
  try {
    for (const auto& b : j.at("blocks")) {
      SequenceBlock blk;
      blk.unit = b.contains("unit") ? parse_unit(b.at("unit")) : SequenceUnit::cpmg();
      blk.t = b.contains("t_s") ? b.at("t_s").get<double>() : b.at("t_us").get<double>() * microsecond;
      blk.N = b.at("N").get<long>();
      p.blocks.push_back(blk);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed plan: ") + e.what());
  }
  require(!p.blocks.empty(), "plan has no blocks");
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json metrics_to_json(const MetricsReport& m) {
  return {{"labels", m.labels},
          {"target_labels", m.target_labels},
          {"phi0", round12(m.phi0)},
          {"phi1", round12(m.phi1)},
          {"axis_dot", round12(m.axis_dot)},
          {"g1", round12(m.g1)},
          {"one_tangles", round12(m.one_tangles)},
          {"one_tangles_scaled", round12(m.one_tangles_scaled)},
          {"ep_unitary", round12(m.ep_unitary)},
          {"ep_nonunitary", round12(m.ep_nonunitary)},
          {"ep_scaled", round12(m.ep_scaled)},
          {"ep_nonunitary_scaled", round12(m.ep_nonunitary_scaled)},
          {"gate_error", round12(m.gate_error)},
          {"target_unitary_dim", m.target_unitary_dim},
          {"total_time_ms", round12(m.total_time * 1e3)}};
}

inline json case_to_json(const Case& c, std::size_t id) {
  return {{"case_id", id},
          {"scheme", scheme_name(c.scheme)},
          {"spins", c.spin_labels},
          {"plan", plan_to_json(c.plan)},
          {"metrics", metrics_to_json(c.metrics)},
          {"rank_score", round12(c.rank_score)}};
}

inline std::string cases_to_csv(const std::vector<Case>& cases) {
  std::ostringstream out;
  out << "case_id,spins,blocks_t_us,blocks_N,T_ms,ep_scaled,gate_error,one_tangles_scaled\n";
  auto join = [](const auto& items, auto&& f) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ";" : "") + f(items[i]);
    return s;
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    std::vector<double> target_ot;
    for (auto s : c.spins) target_ot.push_back(c.metrics.one_tangles_scaled[s]);
    out << i << ',' << join(c.spin_labels, [](const std::string& s) { return s; }) << ','
        << join(c.plan.blocks, [](const SequenceBlock& b) { return fmt12(b.t / microsecond); }) << ','
        << join(c.plan.blocks, [](const SequenceBlock& b) { return std::to_string(b.N); }) << ','
        << fmt12(c.metrics.total_time * 1e3) << ',' << fmt12(c.metrics.ep_scaled) << ','
        << fmt12(c.metrics.gate_error) << ',' << join(target_ot, [](double v) { return fmt12(v); }) << '\n';
  }
  return out.str();
}

inline std::string convex_roof_to_csv(const ConvexRoofResult& r) {
  std::ostringstream out;
  out << "p,tau_min,tau_hull,chi_argmin\n";
  for (std::size_t i = 0; i < r.p_grid.size(); ++i)
    out << fmt12(r.p_grid[i]) << ',' << fmt12(r.tau_min[i]) << ',' << fmt12(r.tau_hull[i]) << ','
        << fmt12(r.chi_argmin[i]) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  fs::path config_path;
  fs::path register_path;
  Scheme scheme = Scheme::sequential;
  SequenceUnit unit = SequenceUnit::cpmg();
  double omega_larmor = default_omega_larmor;
  SearchTolerances tolerances;
  SearchOptions options;
  RankWeights rank_weights;
  fs::path output_dir;
  std::uint64_t rng_seed = 0;
  int chi_resolution = 720;
  int p_points = 101;
  std::size_t verify_samples = 10000;
  // Bloch angles (theta, gamma) of the spectator nuclei; empty means all |0>.
  std::vector<std::array<double, 2>> bath_bloch;

  std::vector<Qubit> bath_state(std::size_t n) const {
    if (bath_bloch.empty()) return std::vector<Qubit>(n, ket0());
    if (bath_bloch.size() == 1) return std::vector<Qubit>(n, bloch_qubit(bath_bloch[0][0], bath_bloch[0][1]));
    require(bath_bloch.size() == n, "bath_bloch needs 1 or " + std::to_string(n) + " entries");
    std::vector<Qubit> q;
    for (const auto& b : bath_bloch) q.push_back(bloch_qubit(b[0], b[1]));
    return q;
  }

  Register load() const { return load_register(register_path, omega_larmor); }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "register_path", "scheme", "unit", "omega_larmor_kHz", "rank_weights", "output_dir", "rng_seed",
      "ghz_size", "gate_time_tol_us", "gate_error_tol", "target_one_tangle_tol", "unwanted_one_tangle_tol",
      "k_max", "t_window_us", "t_step_us", "n_truncation", "candidates_per_spin", "exact_subset_max",
      "subset_beam", "exact_combination_limit", "combination_beam", "threads", "chi_resolution",
      "p_points", "verify_samples", "bath_bloch"};
  return keys;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Parses and fully validates a run configuration; relative paths resolve against the
/// config file's directory. Tolerances not given fall back to the tolerance-table row
/// for the scheme and GHZ size.
inline RunConfig parse_run_config(const json& j, const fs::path& config_path) {
  require(j.is_object(), "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(detail::known_config_keys().count(key) == 1, "unknown config key '" + key + "'");
  RunConfig c;
  c.config_path = config_path;
  const fs::path base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
  require(j.contains("register_path"), "config lacks register_path");
  c.register_path = base / detail::get_or<std::string>(j, "register_path", "");
  require(fs::is_regular_file(c.register_path), "register file not found: " + c.register_path.string());
  c.scheme = parse_scheme(detail::get_or<std::string>(j, "scheme", "sequential"));
  if (j.contains("unit")) c.unit = parse_unit(j.at("unit"));
  c.omega_larmor = detail::get_or<double>(j, "omega_larmor_kHz", default_omega_larmor / kilohertz) * kilohertz;
  require(c.omega_larmor > 0.0 && std::isfinite(c.omega_larmor), "omega_larmor_kHz must be positive");

  const int M = detail::get_or<int>(j, "ghz_size", 3);
  require(M >= 3, "ghz_size must be >= 3");
  SearchTolerances t;
  try {
    t = c.scheme == Scheme::sequential ? sequential_tolerances(M) : multispin_tolerances(M);
  } catch (const config_error&) {
    t.ghz_size = M;
    for (const char* key : {"gate_time_tol_us", "gate_error_tol", "target_one_tangle_tol", "unwanted_one_tangle_tol"})
      require(j.contains(key), std::string("no tolerance table row for this GHZ size; config must set ") + key);
  }
  t.gate_time_tol = detail::get_or<double>(j, "gate_time_tol_us", t.gate_time_tol / microsecond) * microsecond;
  t.gate_error_tol = detail::get_or<double>(j, "gate_error_tol", t.gate_error_tol);
  t.target_one_tangle_tol = detail::get_or<double>(j, "target_one_tangle_tol", t.target_one_tangle_tol);
  t.unwanted_one_tangle_tol = detail::get_or<double>(j, "unwanted_one_tangle_tol", t.unwanted_one_tangle_tol);
  t.k_max = detail::get_or<int>(j, "k_max", t.k_max);
  t.t_window = detail::get_or<double>(j, "t_window_us", t.t_window / microsecond) * microsecond;
  t.t_step = detail::get_or<double>(j, "t_step_us", t.t_step / microsecond) * microsecond;
  t.n_truncation = detail::get_or<int>(j, "n_truncation", t.n_truncation);
  t.validate();
  c.tolerances = t;

  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = detail::get_or<long long>(j, key, static_cast<long long>(fallback));
    require(v >= 0, std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.options.candidates_per_spin = count("candidates_per_spin", c.options.candidates_per_spin);
  c.options.exact_subset_max = count("exact_subset_max", c.options.exact_subset_max);
  c.options.subset_beam = count("subset_beam", c.options.subset_beam);
  c.options.exact_combination_limit = count("exact_combination_limit", c.options.exact_combination_limit);
  c.options.combination_beam = count("combination_beam", c.options.combination_beam);
  c.options.threads = static_cast<unsigned>(count("threads", 1));

  if (j.contains("rank_weights")) {
    const auto w = detail::get_or<std::vector<double>>(j, "rank_weights", {});
    require(w.size() == 3, "rank_weights must have three entries");
    c.rank_weights = {w[0], w[1], w[2]};
  }
  c.rank_weights.validate();
  c.output_dir = base / detail::get_or<std::string>(j, "output_dir", "out");
  c.rng_seed = detail::get_or<std::uint64_t>(j, "rng_seed", 0);
  c.chi_resolution = detail::get_or<int>(j, "chi_resolution", 720);
  require(c.chi_resolution >= 3, "chi_resolution must be >= 3");
  c.p_points = detail::get_or<int>(j, "p_points", 101);
  require(c.p_points >= 2, "p_points must be >= 2");
  c.verify_samples = count("verify_samples", 10000);
  require(c.verify_samples >= 1000, "verify_samples must be >= 1000");
  c.bath_bloch = detail::get_or<std::vector<std::array<double, 2>>>(j, "bath_bloch", {});
  for (const auto& b : c.bath_bloch)
    require(std::isfinite(b[0]) && std::isfinite(b[1]), "bath_bloch angles must be finite");
  return c;
}

inline RunConfig load_run_config(const fs::path& path) { return parse_run_config(read_json(path), path); }

/// Normalised snapshot; paths are written as given relative to the config directory.
inline json config_to_json(const RunConfig& c) {
  const fs::path base = c.config_path.has_parent_path() ? c.config_path.parent_path() : fs::path(".");
  const auto& t = c.tolerances;
  return {{"register_path", c.register_path.lexically_relative(base).generic_string()},
          {"scheme", scheme_name(c.scheme)},
          {"unit", unit_to_json(c.unit)},
          {"omega_larmor_kHz", c.omega_larmor / kilohertz},
          {"ghz_size", t.ghz_size},
          {"gate_time_tol_us", t.gate_time_tol / microsecond},
          {"gate_error_tol", t.gate_error_tol},
          {"target_one_tangle_tol", t.target_one_tangle_tol},
          {"unwanted_one_tangle_tol", t.unwanted_one_tangle_tol},
          {"k_max", t.k_max},
          {"t_window_us", t.t_window / microsecond},
          {"t_step_us", t.t_step / microsecond},
          {"n_truncation", t.n_truncation},
          {"candidates_per_spin", c.options.candidates_per_spin},
          {"exact_subset_max", c.options.exact_subset_max},
          {"subset_beam", c.options.subset_beam},
          {"exact_combination_limit", c.options.exact_combination_limit},
          {"combination_beam", c.options.combination_beam},
          {"rank_weights", {c.rank_weights.ep, c.rank_weights.time, c.rank_weights.error}},
          {"output_dir", c.output_dir.lexically_relative(base).generic_string()},
          {"rng_seed", c.rng_seed},
          {"chi_resolution", c.chi_resolution},
          {"p_points", c.p_points},
          {"verify_samples", c.verify_samples},
          {"bath_bloch", c.bath_bloch}};
}

// ---------------------------------------------------------------------------
// Archive
// ---------------------------------------------------------------------------

/// SOURCE_DATE_EPOCH when set, otherwise the epoch itself, so archives stay reproducible.
inline std::string archive_timestamp() {
  std::time_t t = 0;
  if (const char* s = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(s, &end, 10);
    if (end && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json cases_to_json(const std::vector<Case>& cases) {
  json a = json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) a.push_back(case_to_json(cases[i], i));
  return a;
}

inline void write_archive(const fs::path& dir, const RunConfig& cfg, const std::vector<Case>& cases) {
  fs::create_directories(dir);
  write_text(dir / "cases.json", cases_to_json(cases).dump(2) + "\n");
  write_text(dir / "cases.csv", cases_to_csv(cases));
  write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  const json meta{{"tool", "ghzdd"},
                  {"version", tool_version},
                  {"timestamp", archive_timestamp()},
                  {"scheme", scheme_name(cfg.scheme)},
                  {"case_count", cases.size()}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

/// One case (object with "plan"), a bare plan, or an element of a case array.
inline std::pair<SequencePlan, std::vector<std::string>> load_plan(const fs::path& path, std::size_t index = 0) {
  json j = read_json(path);
  if (j.is_array()) {
    require(index < j.size(), "case index " + std::to_string(index) + " out of range in " + path.string());
    j = j.at(index);
  }
  require(j.is_object(), path.string() + ": expected a plan or case object");
  std::vector<std::string> spins;
  if (j.contains("spins")) spins = j.at("spins").get<std::vector<std::string>>();
  const json& plan = j.contains("plan") ? j.at("plan") : j;
  return {plan_from_json(plan), spins};
}

}  // namespace ghzdd

#endif

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipm/diagnostics.hpp"
#include "ipm/initial_data.hpp"
#include "ipm/linear.hpp"
#include "ipm/snapshot.hpp"
#include "ipm/solver.hpp"
#include "ipm/stratification.hpp"
#include "json.hpp"

namespace ipm::cli {

inline constexpr const char* version = "ipmlab 0.1.0";

enum ExitCode : int { pass = 0, check_failure = 1, config_error = 2, runtime_abort = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InitialSpec {
  std::string family = "zero";  // zero | gaussian_bump | sharpness | bump_plus_rough | random_smooth | snapshot
  double amplitude = 0.05;
  double width = 1.0;
  int mode = 1;
  double rough_amplitude = 0.01;
  double rough_window = 1.0 / 6.0;
  std::filesystem::path path;
};

/// One scenario file. Two levels only: top-level keys and [section] keys.
struct ScenarioConfig {
  std::string mode;
  std::string name = "run";
  std::uint64_t seed = 1;
  int threads = 1;

  int n1 = 64;
  int n2 = 256;
  double L = 8.0 * pi;

  std::string profile_kind = "affine";
  std::vector<double> profile_coeffs;

  InitialSpec initial;

  double k = 3.0;
  double eps = 0.25;

  double t_end = 50.0;
  double cfl_safety = 0.5;
  double dt_max = 0.02;
  double snapshot_cadence = 5.0;
  double diagnostic_cadence = 0.02;
  double boundary_margin = 0.1;
  bool nonlinear = true;
  double blowup_hk = 1e6;

  double t_min = 1.0;
  double t_max = 1000.0;
  int t_count = 61;
  double fit_lo = 10.0;
  double fit_hi = 1000.0;
  double oracle_t_hi = 100.0;
  double oracle_tolerance = 0.02;

  double strat_margin = 0.1;
  int levels = 0;

  std::map<std::string, std::string> raw;  // "section.key" -> text, for the manifest
  std::filesystem::path source_dir;

  Grid grid() const { return Grid(n1, n2, L); }
  StratifiedProfile profile() const {
    const Grid g = grid();
    return profile_kind == "affine" ? StratifiedProfile::affine(g)
                                    : StratifiedProfile::affine_plus_periodic(g, profile_coeffs, k);
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"mode", "name", "seed", "threads"}},
      {"grid", {"n1", "n2", "L"}},
      {"profile", {"kind", "coefficients"}},
      {"initial", {"family", "amplitude", "width", "mode", "rough_amplitude", "rough_window", "path"}},
      {"model", {"k", "eps"}},
      {"time",
       {"t_end", "cfl_safety", "dt_max", "snapshot_cadence", "diagnostic_cadence", "boundary_margin", "nonlinear", "blowup_hk"}},
      {"linear", {"t_min", "t_max", "t_count", "fit_lo", "fit_hi", "oracle_t_hi", "oracle_tolerance"}},
      {"stratify", {"margin", "levels"}},
  };
  return keys;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& field, const std::string& text) {
  std::string t = trim(text);
  double factor = 1.0;
  // "8pi" and "pi" are accepted for lengths.
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    factor = pi;
    t = trim(t.substr(0, t.size() - 2));
    if (t.empty()) t = "1";
    if (t.back() == '*') t = trim(t.substr(0, t.size() - 1));
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v * factor;
  } catch (const std::exception&) {
    throw ConfigError("config error: field '" + field + "' expects a number, got '" + text + "'");
  }
}

inline long long parse_int(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(t, &used);
    if (used != t.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config error: field '" + field + "' expects an integer, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config error: field '" + field + "' expects true/false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!trim(cell).empty()) out.push_back(parse_real(field, cell));
  }
  return out;
}

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("config error: field '" + field + "' " + what);
}

}  // namespace detail

inline ScenarioConfig parse_config_stream(std::istream& is, const std::filesystem::path& source_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config error: line " + std::to_string(e.line()) + ": " + e.message());
  }

  ScenarioConfig c;
  c.source_dir = source_dir;
  const auto& allowed = detail::allowed_keys();
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      if (!allowed.at("").count(key)) throw ConfigError("config error: unknown key '" + key + "'");
      c.raw[key] = node.data();
      continue;
    }
    auto sec = allowed.find(key);
    if (sec == allowed.end() || key.empty()) throw ConfigError("config error: unknown section [" + key + "]");
    for (const auto& [sub, leaf] : node) {
      if (!sec->second.count(sub)) throw ConfigError("config error: unknown key '" + key + "." + sub + "'");
      if (!leaf.empty()) throw ConfigError("config error: nesting deeper than two levels at '" + key + "." + sub + "'");
      c.raw[key + "." + sub] = leaf.data();
    }
  }

  using namespace detail;
  auto has = [&](const std::string& f) { return c.raw.count(f) != 0; };
  auto real = [&](const std::string& f, double& dst) {
    if (has(f)) dst = parse_real(f, c.raw[f]);
  };
  auto integer = [&](const std::string& f, auto& dst) {
    if (has(f)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(parse_int(f, c.raw[f]));
  };

  require(has("mode"), "mode", "is required");
  c.mode = trim(c.raw["mode"]);
  static const std::set<std::string> modes{"linear_decay", "sharpness", "simulate", "stratify"};
  require(modes.count(c.mode) != 0, "mode", "must be one of linear_decay, sharpness, simulate, stratify (got '" + c.mode + "')");
  if (has("name")) c.name = trim(c.raw["name"]);
  require(!c.name.empty() && c.name.find('/') == std::string::npos, "name", "must be a plain non-empty name");
  if (has("seed")) {
    const auto s = parse_int("seed", c.raw["seed"]);
    require(s >= 0, "seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  integer("threads", c.threads);
  require(c.threads >= 1, "threads", "must be >= 1");

  integer("grid.n1", c.n1);
  integer("grid.n2", c.n2);
  real("grid.L", c.L);
  auto pow2 = [](int n) { return n >= 16 && (n & (n - 1)) == 0; };
  require(pow2(c.n1), "grid.n1", "must be a power of two >= 16");
  require(pow2(c.n2), "grid.n2", "must be a power of two >= 16");
  require(c.L > 0.0, "grid.L", "must be > 0");

  if (has("profile.kind")) c.profile_kind = trim(c.raw["profile.kind"]);
  require(c.profile_kind == "affine" || c.profile_kind == "affine_plus_periodic", "profile.kind",
          "must be affine or affine_plus_periodic");
  if (has("profile.coefficients")) c.profile_coeffs = parse_list("profile.coefficients", c.raw["profile.coefficients"]);
  require(c.profile_kind != "affine" || c.profile_coeffs.empty(), "profile.coefficients",
          "is not allowed for an affine profile");

  if (has("initial.family")) c.initial.family = trim(c.raw["initial.family"]);
  static const std::set<std::string> families{"zero",          "gaussian_bump", "sharpness",
                                              "bump_plus_rough", "random_smooth", "snapshot"};
  require(families.count(c.initial.family) != 0, "initial.family",
          "must be one of zero, gaussian_bump, sharpness, bump_plus_rough, random_smooth, snapshot");
  real("initial.amplitude", c.initial.amplitude);
  real("initial.width", c.initial.width);
  integer("initial.mode", c.initial.mode);
  real("initial.rough_amplitude", c.initial.rough_amplitude);
  real("initial.rough_window", c.initial.rough_window);
  require(c.initial.width > 0.0, "initial.width", "must be > 0");
  require(c.initial.mode >= 1 && c.initial.mode < c.n1 / 3, "initial.mode", "must lie in [1, n1/3)");
  require(c.initial.rough_window > 0.0, "initial.rough_window", "must be > 0");
  if (c.initial.family == "snapshot") {
    require(has("initial.path"), "initial.path", "is required for family = snapshot");
    c.initial.path = trim(c.raw["initial.path"]);
    if (c.initial.path.is_relative() && !source_dir.empty()) c.initial.path = source_dir / c.initial.path;
  }

  real("model.k", c.k);
  real("model.eps", c.eps);
  const bool uses_k = c.mode != "stratify" || c.initial.family == "sharpness" || c.initial.family == "bump_plus_rough";
  if (uses_k) require(c.k > 2.0, "model.k", "must be > 2");
  const bool uses_eps = c.mode == "sharpness" || c.initial.family == "sharpness" || c.initial.family == "bump_plus_rough";
  if (uses_eps) require(c.eps > 0.0 && c.eps < 1.0, "model.eps", "must lie in (0, 1)");
  if (c.mode == "sharpness") {
    require(has("model.k"), "model.k", "is required for mode = sharpness");
    require(has("model.eps"), "model.eps", "is required for mode = sharpness");
  }

  real("time.t_end", c.t_end);
  real("time.cfl_safety", c.cfl_safety);
  real("time.dt_max", c.dt_max);
  real("time.snapshot_cadence", c.snapshot_cadence);
  real("time.diagnostic_cadence", c.diagnostic_cadence);
  real("time.boundary_margin", c.boundary_margin);
  real("time.blowup_hk", c.blowup_hk);
  if (has("time.nonlinear")) c.nonlinear = parse_bool("time.nonlinear", c.raw["time.nonlinear"]);
  if (c.mode == "simulate") {
    require(has("time.t_end"), "time.t_end", "is required for mode = simulate");
    require(c.t_end > 0.0, "time.t_end", "must be > 0");
    require(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0, "time.cfl_safety", "must lie in (0, 1]");
    require(c.dt_max > 0.0, "time.dt_max", "must be > 0");
    require(c.snapshot_cadence > 0.0, "time.snapshot_cadence", "must be > 0");
    require(c.diagnostic_cadence > 0.0, "time.diagnostic_cadence", "must be > 0");
    require(c.boundary_margin >= 0.0 && c.boundary_margin < 1.0, "time.boundary_margin", "must lie in [0, 1)");
    require(c.blowup_hk > 0.0, "time.blowup_hk", "must be > 0");
  }

  real("linear.t_min", c.t_min);
  real("linear.t_max", c.t_max);
  integer("linear.t_count", c.t_count);
  real("linear.fit_lo", c.fit_lo);
  real("linear.fit_hi", c.fit_hi);
  real("linear.oracle_t_hi", c.oracle_t_hi);
  real("linear.oracle_tolerance", c.oracle_tolerance);
  if (c.mode == "linear_decay" || c.mode == "sharpness") {
    require(c.t_min > 0.0, "linear.t_min", "must be > 0");
    if (c.mode == "sharpness") require(c.t_min >= 1.0, "linear.t_min", "must be >= 1 (the lower bound is stated for t >= 1)");
    require(c.t_max > c.t_min, "linear.t_max", "must exceed linear.t_min");
    require(c.t_count >= 2, "linear.t_count", "must be >= 2");
    require(c.fit_lo >= 1.0 && c.fit_hi > c.fit_lo, "linear.fit_lo", "must satisfy 1 <= fit_lo < fit_hi");
    require(c.oracle_tolerance > 0.0, "linear.oracle_tolerance", "must be > 0");
  }

  real("stratify.margin", c.strat_margin);
  integer("stratify.levels", c.levels);
  require(c.strat_margin > 0.0 && c.strat_margin < 0.5, "stratify.margin", "must lie in (0, 0.5)");
  require(c.levels == 0 || c.levels >= 2, "stratify.levels", "must be 0 (automatic) or >= 2");
  return c;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config_stream(is);
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config error: cannot read " + path.string());
  return parse_config_stream(is, path.parent_path());
}

/// theta0 on the configured grid.
inline RealField initial_field(const ScenarioConfig& c) {
  const Grid g = c.grid();
  const auto& in = c.initial;
  if (in.family == "zero") return RealField(g);
  if (in.family == "gaussian_bump") return gaussian_bump(g, in.amplitude, in.width, in.mode);
  if (in.family == "random_smooth") return random_smooth(g, c.seed, in.amplitude);
  if (in.family == "sharpness") {
    RealField f = inverse(sharpness_data(SharpnessSpec(c.k, c.eps, g)));
    for (double& v : f.values) v *= in.amplitude;
    return f;
  }
  if (in.family == "bump_plus_rough") {
    RealField f = gaussian_bump(g, in.amplitude, in.width, in.mode);
    const RealField r = rough_component(g, c.k, c.eps, in.rough_amplitude, in.rough_window);
    for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] += r.values[q];
    return f;
  }
  if (in.family == "snapshot") {
    Snapshot s = read_snapshot(in.path);
    if (!(s.field.grid == g)) {
      throw ConfigError("config error: snapshot grid " + std::to_string(s.field.grid.n1()) + "x" +
                        std::to_string(s.field.grid.n2()) + " does not match [grid]");
    }
    return s.field;
  }
  throw ConfigError("config error: unknown initial.family '" + in.family + "'");
}

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

inline nlohmann::json to_json(const Check& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}, {"detail", c.detail}};
}

/// Manifest bookkeeping for one run directory; written atomically.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, std::string mode) : dir_(std::move(dir)) {
    doc_["code_version"] = version;
    doc_["mode"] = std::move(mode);
    doc_["status"] = "running";
    doc_["conventions"] = {
        {"domain", "[0, 2pi) x [-L, L), periodic"},
        {"grid", "x1_i = i 2pi/n1, x2_j = -L + j 2L/n2, samples row-major with x1 fastest"},
        {"fourier", "unitary: coefficients are FFT sums times sqrt(4 pi L)/(n1 n2); sum |c|^2 = integral |f|^2"},
        {"wavenumbers", "n integer, xi = pi m / L"},
        {"sobolev", "||f||_{H^k}^2 = ||f||^2 + sum (|n|^{2k} + |xi|^{2k}) |c|^2, with 0^0 = 1"},
        {"sobolev_k0", "k = 0 gives sqrt(2) ||f||_{L2}: Hdot^0 is identified with L2"},
        {"snapshot_format", "IPMSNAP1 little-endian: magic, u32 n1, u32 n2, f64 L, f64 t, u32 name_len, name, f64 samples"}};
    doc_["files"] = nlohmann::json::array();
    doc_["checks"] = nlohmann::json::array();
    start_ = std::chrono::steady_clock::now();
  }

  nlohmann::json& doc() { return doc_; }
  void add_file(const std::filesystem::path& p) { doc_["files"].push_back(std::filesystem::relative(p, dir_).string()); }
  void add_check(const Check& c) { doc_["checks"].push_back(to_json(c)); }
  void set_config(const ScenarioConfig& c) {
    doc_["config"] = c.raw;
    doc_["seed"] = c.seed;
    doc_["name"] = c.name;
  }

  void write(const std::string& status, const std::string& message = {}) {
    doc_["status"] = status;
    if (!message.empty()) doc_["message"] = message;
    doc_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::filesystem::create_directories(dir_);
    const auto tmp = dir_ / "manifest.json.tmp";
    {
      std::ofstream os(tmp, std::ios::trunc);
      os << doc_.dump(2) << '\n';
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / "manifest.json");
  }

 private:
  std::filesystem::path dir_;
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

struct RunOptions {
  std::filesystem::path out;
  std::ostream* log = &std::cout;
};

namespace detail {

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::vector<double> log_grid(double a, double b, int count) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int q = 0; q < count; ++q) t[static_cast<std::size_t>(q)] = a * std::pow(b / a, double(q) / (count - 1));
  t.back() = b;
  return t;
}

inline int finish(RunManifest& m, const std::vector<Check>& checks, std::ostream& log) {
  bool ok = true;
  for (const auto& c : checks) {
    m.add_check(c);
    log << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << "  threshold=" << c.threshold;
    if (!c.detail.empty()) log << "  (" << c.detail << ")";
    log << '\n';
    ok = ok && c.passed;
  }
  m.write(ok ? "completed" : "completed_with_failures");
  return ok ? pass : check_failure;
}

}  // namespace detail

/// Exact linear evolution on a log-spaced t-grid with oracle comparison for
/// the sharpness family.
inline int cmd_linear_decay(const ScenarioConfig& c, const RunOptions& o, RunManifest& m) {
  const Grid g = c.grid();
  if (c.profile_kind != "affine") {
    throw ConfigError("config error: field 'profile.kind' must be affine for linear_decay (use simulate with time.nonlinear = false)");
  }
  const SpectralField theta0 = forward(initial_field(c));
  const bool has_oracle = c.initial.family == "sharpness";
  std::optional<SharpnessSpec> spec;
  if (has_oracle) spec.emplace(c.k, c.eps, g);
  const double scale2 = c.initial.amplitude * c.initial.amplitude;

  const auto times = detail::log_grid(c.t_min, c.t_max, c.t_count);
  const LinearQuantity quantities[] = {LinearQuantity::L2, LinearQuantity::H2_of_U, LinearQuantity::H2_of_U2};
  std::map<LinearQuantity, std::vector<double>> grid_vals;

  const auto csv = o.out / "decay.csv";
  std::ofstream os(csv);
  os << "t,quantity,grid_value,oracle_value\n" << std::setprecision(17);
  double worst = 0.0;
  for (double t : times) {
    const SpectralField th = evolve_exact(LinearState{theta0, 0.0}, t).theta;
    for (auto q : quantities) {
      const double gv = linear_norm_grid(th, q);
      grid_vals[q].push_back(gv);
      os << t << ',' << to_string(q) << ',' << gv << ',';
      if (has_oracle) {
        const double ov = scale2 * linear_norm_oracle(*spec, t, q);
        os << ov;
        if (q == LinearQuantity::L2 && t >= 1.0 && t <= c.oracle_t_hi) worst = std::max(worst, std::abs(gv - ov) / ov);
      } else {
        os << "nan";
      }
      os << '\n';
    }
  }
  os.close();
  m.add_file(csv);

  nlohmann::json fits = nlohmann::json::array();
  for (auto q : quantities) {
    const double shift = (q == LinearQuantity::H2_of_U) ? 1.0 : 0.0;
    nlohmann::json j{{"quantity", to_string(q)}};
    if (has_oracle) j["predicted_exponent"] = -(c.k - shift) - 2.0 * c.eps;
    const auto& y = grid_vals[q];
    if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
      j["status"] = "identically zero";
    } else {
      try {
        j["fit"] = to_json(fit_power_law(times, y, {c.fit_lo, c.fit_hi}, false));
        j["status"] = "ok";
      } catch (const std::exception& e) {
        j["status"] = std::string("failed: ") + e.what();
      }
    }
    fits.push_back(j);
  }
  nlohmann::json report{{"mode", "linear_decay"}, {"k", c.k}, {"fits", fits}};
  if (has_oracle) {
    report["eps"] = c.eps;
    report["oracle_max_rel_error_l2"] = worst;
  }
  detail::write_json(o.out / "report.json", report);
  m.add_file(o.out / "report.json");

  std::vector<Check> checks;
  if (has_oracle) {
    checks.push_back({"grid_vs_oracle_l2", worst <= c.oracle_tolerance, worst, c.oracle_tolerance,
                      "max relative error for t in [1, " + detail::fmt(c.oracle_t_hi) + "]"});
  }
  return detail::finish(m, checks, *o.log);
}

/// Quadrature-only sharpness study: lower bound C t^{-k-2eps} checked at each t.
inline int cmd_sharpness(const ScenarioConfig& c, const RunOptions& o, RunManifest& m) {
  // The oracle is 1D; the grid only anchors the sharpness family's resolution check.
  const Grid g(16, 1024, 64.0 * pi);
  const SharpnessSpec spec(c.k, c.eps, g);
  const double C = sharpness_lower_constant(c.k);
  const double target = -c.k - 2.0 * c.eps;
  const auto times = detail::log_grid(c.t_min, c.t_max, c.t_count);

  const auto csv = o.out / "sharpness.csv";
  std::ofstream os(csv);
  os << "t,l2_theta_sq,lower_bound,h2_u_sq,h2_u2_sq\n" << std::setprecision(17);
  std::vector<double> l2, hu, hu2;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (double t : times) {
    l2.push_back(linear_norm_oracle(spec, t, LinearQuantity::L2));
    hu.push_back(linear_norm_oracle(spec, t, LinearQuantity::H2_of_U));
    hu2.push_back(linear_norm_oracle(spec, t, LinearQuantity::H2_of_U2));
    const double lb = C * std::pow(t, target);
    min_ratio = std::min(min_ratio, l2.back() / lb);
    os << t << ',' << l2.back() << ',' << lb << ',' << hu.back() << ',' << hu2.back() << '\n';
  }
  os.close();
  m.add_file(csv);

  const FitWindow w{c.fit_lo, c.fit_hi};
  const auto f_l2 = fit_power_law(times, l2, w, false);
  const auto f_u = fit_power_law(times, hu, w, false);
  const auto f_u2 = fit_power_law(times, hu2, w, false);
  nlohmann::json report{
      {"mode", "sharpness"},
      {"k", c.k},
      {"eps", c.eps},
      {"lower_bound_constant", C},
      {"min_ratio_to_lower_bound", min_ratio},
      {"fits",
       {{{"quantity", "l2_theta_sq"}, {"predicted_exponent", target}, {"fit", to_json(f_l2)},
         {"within_0.05", std::abs(f_l2.exponent - target) <= 0.05}},
        {{"quantity", "h2_u_sq"}, {"predicted_exponent", target + 1.0}, {"fit", to_json(f_u)},
         {"within_0.1", std::abs(f_u.exponent - target - 1.0) <= 0.1}},
        {{"quantity", "h2_u2_sq"}, {"predicted_exponent", target}, {"fit", to_json(f_u2)},
         {"within_0.1", std::abs(f_u2.exponent - target) <= 0.1}}}}};
  detail::write_json(o.out / "report.json", report);
  m.add_file(o.out / "report.json");

  *o.log << "fitted exponent of ||theta||^2: " << f_l2.exponent << " (predicted " << target << ")\n";
  return detail::finish(m, {{"lower_bound_holds", min_ratio >= 1.0, min_ratio, 1.0, "min over t of ||theta||^2 / (C t^{-k-2eps})"}},
                        *o.log);
}

inline int cmd_simulate(const ScenarioConfig& c, const RunOptions& o, RunManifest& m) {
  SolverConfig sc{c.grid(), c.profile()};
  sc.k = c.k;
  sc.t_end = c.t_end;
  sc.cfl_safety = c.cfl_safety;
  sc.dt_max = c.dt_max;
  sc.snapshot_cadence = c.snapshot_cadence;
  sc.diagnostic_cadence = c.diagnostic_cadence;
  sc.boundary_margin = c.boundary_margin;
  sc.nonlinear = c.nonlinear;
  sc.blowup_hk = c.blowup_hk;
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  const SpectralField theta0 = forward(initial_field(c));

  const auto snap_dir = o.out / "snapshots";
  std::filesystem::create_directories(snap_dir);
  int snap_index = 0;
  RunHooks hooks;
  hooks.threads = c.threads;
  hooks.on_snapshot = [&](const SimulationState& s) {
    std::ostringstream name;
    name << "theta_" << std::setw(5) << std::setfill('0') << snap_index++ << ".bin";
    write_snapshot(snap_dir / name.str(), Snapshot{inverse(s.theta), s.t, "theta"});
    m.add_file(snap_dir / name.str());
  };
  Trajectory tr;
  try {
    tr = run(sc, theta0, hooks);
  } catch (const MonotonicityError& e) {
    throw ConfigError(std::string("config error: initial density is not strictly decreasing in x2: ") + e.what());
  }

  tr.series.write_csv(o.out / "diagnostics.csv");
  m.add_file(o.out / "diagnostics.csv");
  {
    std::ofstream os(o.out / "theta_star.csv");
    os << "x2,theta_star\n" << std::setprecision(17);
    for (int j = 0; j < sc.grid.n2(); ++j) os << sc.grid.x2(j) << ',' << tr.theta_star[static_cast<std::size_t>(j)] << '\n';
    m.add_file(o.out / "theta_star.csv");
  }

  m.doc()["run"] = {{"status", tr.status},
                    {"steps", tr.steps},
                    {"hk_initial", tr.hk_initial},
                    {"hk_max", tr.hk_max},
                    {"margin_violation", tr.margin_violation}};
  if (tr.margin_violation) {
    m.doc()["run"]["margin_violation_time"] = tr.margin_violation_time;
    *o.log << "warning: perturbation support reaches |x2| > L(1 - margin) at t = " << tr.margin_violation_time << '\n';
  }
  if (!tr.completed()) {
    *o.log << "aborted: " << tr.message << '\n';
    m.write("aborted", tr.message);
    return runtime_abort;
  }

  const auto rep = decay_report(tr.series, c.k);
  nlohmann::json report = to_json(rep);
  report["mode"] = "simulate";
  report["hk_initial"] = tr.hk_initial;
  report["hk_max"] = tr.hk_max;
  report["margin_violation"] = tr.margin_violation;
  detail::write_json(o.out / "report.json", report);
  write_report_csv(o.out / "report.csv", rep);
  m.add_file(o.out / "report.json");
  m.add_file(o.out / "report.csv");

  std::vector<Check> checks;
  checks.push_back({"energy_balance", rep.energy_balance_residual < 1e-3, rep.energy_balance_residual, 1e-3, ""});
  const auto& e = tr.series.column(columns::energy_E);
  const auto& u = tr.series.column(columns::l2_u);
  std::size_t bad = 0;
  for (std::size_t q = 1; q < e.size(); ++q) {
    const bool still = u[q] == 0.0 && u[q - 1] == 0.0;
    if (still ? e[q] != e[q - 1] : !(e[q] < e[q - 1])) ++bad;
  }
  checks.push_back({"energy_strictly_decreasing", bad == 0, double(bad), 0.0, "count of non-decreasing steps"});
  const double ratio = tr.hk_initial > 0.0 ? tr.hk_max / tr.hk_initial : 1.0;
  checks.push_back({"hk_bounded", ratio <= 1.1, ratio, 1.1, "max ||theta||_{H^k} / ||theta0||_{H^k}"});
  return detail::finish(m, checks, *o.log);
}

inline int cmd_stratify(const ScenarioConfig& c, const RunOptions& o, RunManifest& m) {
  const Grid g = c.grid();
  const RealField theta = initial_field(c);
  const DensityField f = DensityField::from_profile(c.profile(), theta);
  LevelSetDecomposition dec{g, {}, {}, {}, {}, {}};
  try {
    const LevelGrid levels = LevelGrid::automatic(f, c.strat_margin * g.L(), c.levels);
    dec = decompose(f, levels, c.threads);
  } catch (const MonotonicityError& e) {
    throw ConfigError(std::string("config error: density rejected: ") + e.what());
  }
  const auto rep = potential_energy_report(f, dec);

  write_decomposition_csv(o.out / "levels.csv", dec);
  write_h_block(o.out / "h.bin", dec);
  write_f_star(o.out / "f_star.csv", dec);
  for (const char* p : {"levels.csv", "h.bin", "f_star.csv"}) m.add_file(o.out / p);

  nlohmann::json report{{"mode", "stratify"},
                        {"energy_h", rep.energy_h},
                        {"energy_direct", rep.energy_direct},
                        {"s_cut", rep.s_cut},
                        {"l2_gap", rep.l2_gap},
                        {"ratio_lower", rep.ratio_lower},
                        {"ratio_upper", rep.ratio_upper},
                        {"endpoint_ratio", rep.endpoint_ratio},
                        {"endpoint_warning", rep.endpoint_warning},
                        {"gamma_measured", dec.gamma},
                        {"levels", dec.levels()}};
  detail::write_json(o.out / "report.json", report);
  m.add_file(o.out / "report.json");
  if (rep.endpoint_warning) {
    *o.log << "warning: h at the level-range endpoints is " << rep.endpoint_ratio << " of max |h| (> 1e-8)\n";
  }
  *o.log << "energy (1/2||h||^2) = " << rep.energy_h << ", direct = " << rep.energy_direct << '\n';

  const double diff = std::abs(rep.energy_h - rep.energy_direct);
  const double tol = std::max(1e-6, 0.02 * std::abs(rep.energy_h));
  return detail::finish(m, {{"energy_oracle_agreement", diff <= tol, diff, tol, "|energy_h - energy_direct|"}}, *o.log);
}

/// Dispatch one scenario into `o.out`; every exit path leaves a manifest.
inline int run_scenario(const ScenarioConfig& c, const RunOptions& o) {
  std::filesystem::create_directories(o.out);
  RunManifest m(o.out, c.mode);
  m.set_config(c);
  try {
    if (c.mode == "linear_decay") return cmd_linear_decay(c, o, m);
    if (c.mode == "sharpness") return cmd_sharpness(c, o, m);
    if (c.mode == "simulate") return cmd_simulate(c, o, m);
    if (c.mode == "stratify") return cmd_stratify(c, o, m);
    throw ConfigError("config error: unknown mode '" + c.mode + "'");
  } catch (const ConfigError& e) {
    *o.log << e.what() << '\n';
    m.write("config_error", e.what());
    return config_error;
  } catch (const std::invalid_argument& e) {
    // Library precondition failures during setup come from the scenario.
    *o.log << "config error: " << e.what() << '\n';
    m.write("config_error", e.what());
    return config_error;
  } catch (const std::exception& e) {
    *o.log << "runtime error: " << e.what() << '\n';
    m.write("aborted", e.what());
    return runtime_abort;
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string expected_mode;  // empty accepts any mode
};

/// Parse + validate + run; config errors still leave a manifest in `out`.
inline int run_config_file(const std::filesystem::path& config, const Overrides& ov, const RunOptions& o) {
  ScenarioConfig c;
  try {
    c = parse_config(config);
    if (ov.seed) {
      c.seed = *ov.seed;
      c.raw["seed"] = std::to_string(*ov.seed);
    }
    if (ov.threads) {
      if (*ov.threads < 1) throw ConfigError("config error: field 'threads' must be >= 1");
      c.threads = *ov.threads;
    }
    if (!ov.expected_mode.empty() && c.mode != ov.expected_mode) {
      throw ConfigError("config error: field 'mode' is '" + c.mode + "' but the subcommand is '" + ov.expected_mode + "'");
    }
  } catch (const ConfigError& e) {
    *o.log << e.what() << '\n';
    try {
      RunManifest m(o.out, ov.expected_mode);
      m.doc()["config_path"] = config.string();
      m.write("config_error", e.what());
    } catch (const std::exception& w) {
      *o.log << "cannot write manifest: " << w.what() << '\n';
    }
    return config_error;
  }
  return run_scenario(c, o);
}

}  // namespace ipm::cli

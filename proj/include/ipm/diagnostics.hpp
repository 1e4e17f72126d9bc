#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ipm {

class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace columns {
inline constexpr const char* l2_theta = "l2_theta";
inline constexpr const char* hk_theta = "hk_theta";
inline constexpr const char* l2_u = "l2_u";
inline constexpr const char* h2_u = "h2_u";
inline constexpr const char* h2_u2 = "h2_u2";
inline constexpr const char* grad_linf_u2 = "grad_linf_u2";
inline constexpr const char* energy_E = "energy_E";
inline constexpr const char* l2_rho_minus_rhostar = "l2_rho_minus_rhostar";

inline const std::vector<std::string>& all() {
  static const std::vector<std::string> names{l2_theta, hk_theta,  l2_u,     h2_u,
                                              h2_u2,    grad_linf_u2, energy_E, l2_rho_minus_rhostar};
  return names;
}
}  // namespace columns

/// Scalar diagnostics sampled at increasing times. Columns keep insertion order.
class NormSeries {
 public:
  NormSeries() = default;
  NormSeries(std::vector<std::string> names, double k) : names_(std::move(names)), k_(k) {
    for (const auto& n : names_) data_[n];
  }

  double k() const { return k_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  bool has(const std::string& name) const { return data_.count(name) != 0; }

  const std::vector<double>& column(const std::string& name) const {
    auto it = data_.find(name);
    if (it == data_.end()) throw std::out_of_range("NormSeries: missing column '" + name + "'");
    return it->second;
  }
  std::vector<double>& column(const std::string& name) {
    auto it = data_.find(name);
    if (it == data_.end()) throw std::out_of_range("NormSeries: missing column '" + name + "'");
    return it->second;
  }

  /// Append one row; `values` must follow names() order.
  void append(double t, const std::vector<double>& values) {
    if (values.size() != names_.size()) throw std::invalid_argument("NormSeries::append: column count");
    if (!times_.empty() && !(t > times_.back())) {
      throw std::invalid_argument("NormSeries::append: times must increase");
    }
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (!(values[c] >= 0.0) && names_[c] != columns::energy_E) {
        throw std::invalid_argument("NormSeries::append: negative or NaN value in " + names_[c]);
      }
      data_[names_[c]].push_back(values[c]);
    }
    times_.push_back(t);
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_csv(os);
  }
  void write_csv(std::ostream& os) const {
    os << 't';
    for (const auto& n : names_) os << ',' << n;
    os << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < times_.size(); ++r) {
      os << times_[r];
      for (const auto& n : names_) os << ',' << data_.at(n)[r];
      os << '\n';
    }
  }

  static NormSeries read_csv(const std::filesystem::path& path, double k) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(is, line);
    std::vector<std::string> header;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty() || header.front() != "t") throw std::runtime_error("diagnostics CSV: first column must be t");
    NormSeries s({header.begin() + 1, header.end()}, k);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> row;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      if (row.size() != header.size()) throw std::runtime_error("diagnostics CSV: ragged row");
      s.append(row.front(), {row.begin() + 1, row.end()});
    }
    return s;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::vector<double>> data_;
  std::vector<double> times_;
  double k_ = 3.0;
};

namespace detail {

inline double interp_at(const std::vector<double>& t, const std::vector<double>& y, double x) {
  auto it = std::lower_bound(t.begin(), t.end(), x);
  const auto q = static_cast<std::size_t>(it - t.begin());
  if (q < t.size() && t[q] == x) return y[q];
  const double w = (x - t[q - 1]) / (t[q] - t[q - 1]);
  return (1.0 - w) * y[q - 1] + w * y[q];
}

}  // namespace detail

/// Trapezoid integral of the piecewise-linear series over [a, b].
inline double integrate(const std::vector<double>& t, const std::vector<double>& y, double a, double b) {
  if (t.size() != y.size()) throw std::invalid_argument("integrate: length mismatch");
  if (t.size() < 2 || a < t.front() || b > t.back() || !(b >= a)) {
    throw InsufficientSamples("integrate: [" + std::to_string(a) + ", " + std::to_string(b) +
                              "] not covered by samples");
  }
  double total = 0.0;
  double prev_t = a;
  double prev_y = detail::interp_at(t, y, a);
  for (std::size_t q = 0; q < t.size(); ++q) {
    if (t[q] <= a) continue;
    if (t[q] >= b) break;
    total += 0.5 * (t[q] - prev_t) * (y[q] + prev_y);
    prev_t = t[q];
    prev_y = y[q];
  }
  total += 0.5 * (b - prev_t) * (detail::interp_at(t, y, b) + prev_y);
  return total;
}

/// (2 / t) * integral over [t/2, t].
inline double time_average(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("time_average: t must be > 0");
  if (times.empty() || t / 2 < times.front() || t > times.back()) {
    throw InsufficientSamples("time_average: window [" + std::to_string(t / 2) + ", " + std::to_string(t) +
                              "] not covered by samples");
  }
  const auto inside = std::count_if(times.begin(), times.end(), [&](double s) { return s >= t / 2 && s <= t; });
  if (inside < 2) throw InsufficientSamples("time_average: fewer than two samples in window");
  return integrate(times, values, t / 2, t) * 2.0 / t;
}

inline double time_average(const NormSeries& s, const std::string& column, double t) {
  return time_average(s.times(), s.column(column), t);
}

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct DecayFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  FitWindow window;
  double r_squared = 0.0;
  bool averaged = false;
  std::size_t samples = 0;
};

/// OLS of log y against log t on the samples inside the window, after
/// replacing y by its time average when `averaged`.
inline DecayFit fit_power_law(const std::vector<double>& times, const std::vector<double>& values,
                              FitWindow window, bool averaged) {
  if (times.size() != values.size()) throw std::invalid_argument("fit_power_law: length mismatch");
  if (!(window.t_lo >= 1.0) || !(window.t_hi > window.t_lo)) {
    throw std::invalid_argument("fit_power_law: degenerate window [" + std::to_string(window.t_lo) + ", " +
                                std::to_string(window.t_hi) + "] (need 1 <= t_lo < t_hi)");
  }
  std::vector<double> lx, ly;
  for (std::size_t q = 0; q < times.size(); ++q) {
    const double t = times[q];
    if (t < window.t_lo || t > window.t_hi) continue;
    const double y = averaged ? time_average(times, values, t) : values[q];
    if (!(y > 0.0)) {
      throw std::domain_error("fit_power_law: nonpositive value " + std::to_string(y) + " at t = " +
                              std::to_string(t));
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(y));
  }
  const auto n = lx.size();
  if (n < 10) {
    throw InsufficientSamples("fit_power_law: " + std::to_string(n) + " samples in window, need >= 10");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    mx += lx[q];
    my += ly[q];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    sxx += (lx[q] - mx) * (lx[q] - mx);
    sxy += (lx[q] - mx) * (ly[q] - my);
    syy += (ly[q] - my) * (ly[q] - my);
  }
  DecayFit fit;
  fit.exponent = sxy / sxx;
  fit.prefactor = std::exp(my - fit.exponent * mx);
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  fit.window = window;
  fit.averaged = averaged;
  fit.samples = n;
  return fit;
}

/// Fit windows skip t < 5 and the final 10% of the run.
inline FitWindow default_window(double t_end) { return {5.0, 0.9 * t_end}; }

/// Dyadic hierarchy over the sample index range: the whole run, its halves,
/// quarters, ... down to single sample intervals. Returned as index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> dyadic_intervals(std::size_t samples) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (samples < 2) return out;
  const std::size_t last = samples - 1;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t pieces = 1;; pieces *= 2) {
    std::size_t prev = 0;
    for (std::size_t p = 1; p <= pieces; ++p) {
      const std::size_t b = last * p / pieces;
      if (b > prev && seen.insert({prev, b}).second) out.emplace_back(prev, b);
      prev = b;
    }
    if (pieces >= last) break;
  }
  return out;
}

/// Running trapezoid integral of a column from the first sample.
inline std::vector<double> running_integral(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t q = 1; q < t.size(); ++q) out[q] = out[q - 1] + 0.5 * (t[q] - t[q - 1]) * (y[q] + y[q - 1]);
  return out;
}

/// max over dyadic intervals of |dE + int ||u||^2| / max(int ||u||^2, 1e-14).
inline double energy_balance(const NormSeries& s) {
  if (!s.has(columns::energy_E) || !s.has(columns::l2_u)) {
    throw std::invalid_argument("energy_balance: series needs energy_E and l2_u columns");
  }
  const auto& t = s.times();
  const auto& e = s.column(columns::energy_E);
  std::vector<double> u2(s.size());
  const auto& u = s.column(columns::l2_u);
  for (std::size_t q = 0; q < u.size(); ++q) u2[q] = u[q] * u[q];
  const auto cumulative = running_integral(t, u2);
  double worst = 0.0;
  for (const auto& [a, b] : dyadic_intervals(t.size())) {
    const double diss = cumulative[b] - cumulative[a];
    const double de = e[b] - e[a];
    worst = std::max(worst, std::abs(de + diss) / std::max(diss, 1e-14));
  }
  return worst;
}

struct FitEntry {
  std::string quantity;
  double predicted = 0.0;
  std::string status;  // ok | identically zero | absent | failed: ...
  DecayFit fit;
};

struct DecayReport {
  double k = 0.0;
  std::vector<FitEntry> fits;
  double grad_integral = 0.0;
  double grad_final_quarter_growth = 0.0;
  bool grad_plateaus = false;
  bool grad_available = false;
  double energy_balance_residual = 0.0;
  bool energy_balance_available = false;

  const FitEntry* find(const std::string& q) const {
    for (const auto& f : fits) {
      if (f.quantity == q) return &f;
    }
    return nullptr;
  }
};

/// Fits the averaged decay of E, ||u||^2, ||u||_{H2}^2, t ||u2||_{H2}^2 and
/// ||rho - rho0*||^2 against -k, -(k+1), -(k-1), -(k-1), -k.
inline DecayReport decay_report(const NormSeries& s, double k, std::optional<FitWindow> window = std::nullopt) {
  DecayReport rep;
  rep.k = k;
  if (s.empty()) throw InsufficientSamples("decay_report: empty series");
  const FitWindow w = window.value_or(default_window(s.times().back()));
  const auto& t = s.times();

  struct Spec {
    const char* name;
    const char* column;
    double predicted;
    bool times_t;
  };
  const Spec specs[] = {
      {"energy_E", columns::energy_E, -k, false},
      {"avg_l2_u_sq", columns::l2_u, -(k + 1.0), false},
      {"h2_u_sq", columns::h2_u, -(k - 1.0), false},
      {"t_h2_u2_sq", columns::h2_u2, -(k - 1.0), true},
      {"l2_rho_minus_rhostar_sq", columns::l2_rho_minus_rhostar, -k, false},
  };
  for (const auto& sp : specs) {
    FitEntry e{sp.name, sp.predicted, "ok", {}};
    if (!s.has(sp.column)) {
      e.status = "absent";
      rep.fits.push_back(e);
      continue;
    }
    std::vector<double> y = s.column(sp.column);
    // energy_E is already quadratic; the rest are norms.
    if (std::string(sp.column) != columns::energy_E) {
      for (auto& v : y) v *= v;
    }
    if (sp.times_t) {
      for (std::size_t q = 0; q < y.size(); ++q) y[q] *= t[q];
    }
    if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
      e.status = "identically zero";
    } else {
      try {
        e.fit = fit_power_law(t, y, w, true);
      } catch (const std::exception& ex) {
        e.status = std::string("failed: ") + ex.what();
      }
    }
    rep.fits.push_back(e);
  }

  if (s.has(columns::grad_linf_u2) && s.size() >= 4) {
    rep.grad_available = true;
    const auto I = running_integral(t, s.column(columns::grad_linf_u2));
    rep.grad_integral = I.back();
    const double t_q = t.front() + 0.75 * (t.back() - t.front());
    const double i_q = detail::interp_at(t, I, t_q);
    rep.grad_final_quarter_growth = rep.grad_integral > 0.0 ? (rep.grad_integral - i_q) / rep.grad_integral : 0.0;
    rep.grad_plateaus = rep.grad_final_quarter_growth < 0.05;
  }
  if (s.has(columns::energy_E) && s.has(columns::l2_u) && s.size() >= 2) {
    rep.energy_balance_available = true;
    rep.energy_balance_residual = energy_balance(s);
  }
  return rep;
}

inline nlohmann::json to_json(const DecayFit& f) {
  return {{"exponent", f.exponent},
          {"prefactor", f.prefactor},
          {"window", {f.window.t_lo, f.window.t_hi}},
          {"r_squared", f.r_squared},
          {"averaged", f.averaged},
          {"samples", f.samples}};
}

inline nlohmann::json to_json(const DecayReport& r) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& e : r.fits) {
    nlohmann::json j{{"quantity", e.quantity}, {"predicted_exponent", e.predicted}, {"status", e.status}};
    if (e.status == "ok") j["fit"] = to_json(e.fit);
    fits.push_back(j);
  }
  nlohmann::json out{{"k", r.k}, {"fits", fits}};
  if (r.grad_available) {
    out["grad_linf_u2_integral"] = {{"final", r.grad_integral},
                                    {"final_quarter_growth", r.grad_final_quarter_growth},
                                    {"plateaus", r.grad_plateaus}};
  }
  if (r.energy_balance_available) out["energy_balance_residual"] = r.energy_balance_residual;
  return out;
}

/// Flat CSV: quantity,predicted,exponent,prefactor,r_squared,t_lo,t_hi,averaged,status
inline void write_report_csv(const std::filesystem::path& path, const DecayReport& r) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "quantity,predicted,exponent,prefactor,r_squared,t_lo,t_hi,averaged,status\n" << std::setprecision(17);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : r.fits) {
    const bool ok = e.status == "ok";
    std::string status = e.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << e.quantity << ',' << e.predicted << ',' << (ok ? e.fit.exponent : nan) << ','
       << (ok ? e.fit.prefactor : nan) << ',' << (ok ? e.fit.r_squared : nan) << ','
       << (ok ? e.fit.window.t_lo : nan) << ',' << (ok ? e.fit.window.t_hi : nan) << ','
       << (ok && e.fit.averaged ? 1 : 0) << ',' << status << '\n';
  }
}

}  // namespace ipm

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipm/diagnostics.hpp"
#include "ipm/grid.hpp"
#include "ipm/profile.hpp"
#include "ipm/spectral.hpp"
#include "ipm/stratification.hpp"

namespace ipm {

class BlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  Grid grid;
  StratifiedProfile profile;
  double k = 3.0;
  double t_end = 1.0;
  double cfl_safety = 0.5;
  double dt_max = 0.02;
  double snapshot_cadence = 1.0;
  double diagnostic_cadence = 0.02;
  double boundary_margin = 0.1;  // fraction of L
  bool nonlinear = true;
  double blowup_hk = 1e6;

  void validate() const {
    auto need = [](bool ok, const std::string& msg) {
      if (!ok) throw std::invalid_argument("SolverConfig: " + msg);
    };
    require_same_grid(grid, profile.grid(), "SolverConfig");
    need(k > 2.0, "k must be > 2");
    need(t_end > 0.0, "t_end must be > 0");
    need(cfl_safety > 0.0 && cfl_safety <= 1.0, "cfl_safety must lie in (0, 1]");
    need(dt_max > 0.0, "dt_max must be > 0");
    need(snapshot_cadence > 0.0, "snapshot_cadence must be > 0");
    need(diagnostic_cadence > 0.0, "diagnostic_cadence must be > 0");
    need(boundary_margin >= 0.0 && boundary_margin < 1.0, "boundary_margin must lie in [0, 1)");
  }
};

struct SimulationState {
  SpectralField theta;
  double t = 0.0;
  long step_count = 0;
};

/// -dealias(u . grad theta) - spectral(d2 rho_s u2), products formed pointwise.
inline SpectralField rhs(const SpectralField& theta, const StratifiedProfile& profile, bool nonlinear = true) {
  const Grid& g = theta.grid;
  const Velocity u = velocity(theta);
  SpectralField out(g);
  if (profile.is_affine()) {
    out = u.u2;  // -d2 rho_s = 1
  } else {
    RealField term = inverse(u.u2);
    for (int j = 0; j < g.n2(); ++j) {
      const double c = -profile.drho(j);
      for (int i = 0; i < g.n1(); ++i) term(i, j) *= c;
    }
    out = dealias(forward(term));
  }
  if (nonlinear) {
    const RealField u1 = inverse(u.u1);
    const RealField u2 = inverse(u.u2);
    const RealField d1 = inverse(derivative(theta, Axis::x1));
    const RealField d2 = inverse(derivative(theta, Axis::x2));
    RealField adv(g);
    for (std::size_t q = 0; q < adv.values.size(); ++q) {
      adv.values[q] = u1.values[q] * d1.values[q] + u2.values[q] * d2.values[q];
    }
    out -= dealias(forward(adv));
  }
  return out;
}

/// max over collocation points of |u|.
inline double velocity_linf(const SpectralField& theta) {
  const Velocity u = velocity(theta);
  const RealField a = inverse(u.u1);
  const RealField b = inverse(u.u2);
  double m = 0.0;
  for (std::size_t q = 0; q < a.values.size(); ++q) m = std::max(m, std::hypot(a.values[q], b.values[q]));
  return m;
}

inline double cfl_dt(const SpectralField& theta, double safety, double dt_max) {
  const Grid& g = theta.grid;
  const double umax = std::max(velocity_linf(theta), 1e-8);
  return std::min(dt_max, safety * std::min(g.dx1(), g.dx2()) / umax);
}

inline SimulationState step_rk4(const SimulationState& s, double dt, const StratifiedProfile& profile,
                                bool nonlinear = true) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be > 0");
  const SpectralField k1 = rhs(s.theta, profile, nonlinear);
  SpectralField tmp = s.theta;
  tmp.axpy(0.5 * dt, k1);
  const SpectralField k2 = rhs(tmp, profile, nonlinear);
  tmp = s.theta;
  tmp.axpy(0.5 * dt, k2);
  const SpectralField k3 = rhs(tmp, profile, nonlinear);
  tmp = s.theta;
  tmp.axpy(dt, k3);
  const SpectralField k4 = rhs(tmp, profile, nonlinear);

  SimulationState out{s.theta, s.t + dt, s.step_count + 1};
  for (std::size_t q = 0; q < out.theta.coeffs.size(); ++q) {
    out.theta.coeffs[q] += dt / 6.0 * (k1.coeffs[q] + 2.0 * k2.coeffs[q] + 2.0 * k3.coeffs[q] + k4.coeffs[q]);
  }
  if (!out.theta.all_finite()) {
    throw BlowUp("step_rk4: non-finite coefficient at t = " + std::to_string(out.t) + " (step " +
                 std::to_string(out.step_count) + ")");
  }
  return out;
}

struct Trajectory {
  std::vector<SimulationState> snapshots;
  NormSeries series;
  std::string status = "completed";  // completed | aborted
  std::string message;
  bool margin_violation = false;
  double margin_violation_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> theta_star;  // rho0* - rho_s on the vertical grid
  double hk_initial = 0.0;
  double hk_max = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;

  bool completed() const { return status == "completed"; }
};

/// rho0* - rho_s per vertical row, for the initial density rho_s + theta0.
inline std::vector<double> stratified_reference(const StratifiedProfile& profile, const SpectralField& theta0,
                                                int threads = 1) {
  const Grid& g = theta0.grid;
  const RealField th = inverse(theta0);
  std::vector<double> out(static_cast<std::size_t>(g.n2()), 0.0);
  bool x1_independent = true;
  theta0.for_each([&](int n, double, const Complex& c) {
    if (n != 0 && c != Complex{}) x1_independent = false;
  });
  if (x1_independent) {
    // A density that only depends on x2 (and is monotone) is its own rearrangement.
    for (int j = 0; j < g.n2(); ++j) out[static_cast<std::size_t>(j)] = th(0, j);
    return out;
  }
  const DensityField f = DensityField::from_profile(profile, th);
  const auto dec = decompose(f, LevelGrid::automatic(f), threads);
  for (int j = 0; j < g.n2(); ++j) {
    out[static_cast<std::size_t>(j)] = dec.f_star[static_cast<std::size_t>(j)] - profile.value(g.x2(j));
  }
  return out;
}

namespace detail {

inline std::vector<double> diagnostic_row(const SpectralField& theta, const RealField& th,
                                          const std::vector<double>& theta_star, double k) {
  const Grid& g = theta.grid;
  const Velocity u = velocity(theta);
  const double u1_2 = squared_l2(u.u1);
  const double u2_2 = squared_l2(u.u2);
  const double h1 = sobolev_norm(u.u1, 2.0);
  const double h2 = sobolev_norm(u.u2, 2.0);
  double gap = 0.0;
  for (int j = 0; j < g.n2(); ++j) {
    const double s = theta_star[static_cast<std::size_t>(j)];
    for (int i = 0; i < g.n1(); ++i) gap += (th(i, j) - s) * (th(i, j) - s);
  }
  gap = std::sqrt(gap * g.dx1() * g.dx2());
  return {l2_norm(theta),
          sobolev_norm(theta, k),
          std::sqrt(u1_2 + u2_2),
          std::sqrt(h1 * h1 + h2 * h2),
          h2,
          grad_linf(u.u2),
          energy_moment(th, theta_star),
          gap};
}

// Perturbation support reaching |x2| > L (1 - margin), thresholded at 1e-10 ||theta||_inf.
inline bool outside_margin(const RealField& th, double margin) {
  const Grid& g = th.grid;
  const double thr = 1e-10 * linf_norm(th);
  if (thr == 0.0) return false;
  const double edge = g.L() * (1.0 - margin);
  for (int j = 0; j < g.n2(); ++j) {
    if (std::abs(g.x2(j)) <= edge) continue;
    for (int i = 0; i < g.n1(); ++i) {
      if (std::abs(th(i, j)) > thr) return true;
    }
  }
  return false;
}

}  // namespace detail

struct RunHooks {
  std::function<void(const SimulationState&)> on_snapshot;
  std::function<void(double t, const std::vector<double>& row)> on_diagnostic;
  int threads = 1;
  std::optional<std::vector<double>> theta_star;  // skip the initial decomposition when given
};

inline Trajectory run(const SolverConfig& config, const SpectralField& theta0, const RunHooks& hooks = {}) {
  config.validate();
  require_same_grid(config.grid, theta0.grid, "run");
  const auto wall0 = std::chrono::steady_clock::now();

  Trajectory tr;
  tr.series = NormSeries(columns::all(), config.k);
  SimulationState state{dealias(theta0), 0.0, 0};
  tr.theta_star = hooks.theta_star ? *hooks.theta_star : stratified_reference(config.profile, state.theta, hooks.threads);
  tr.hk_initial = sobolev_norm(state.theta, config.k);
  tr.hk_max = tr.hk_initial;

  auto record_diag = [&](const SimulationState& s) {
    const RealField th = inverse(s.theta);
    const auto row = detail::diagnostic_row(s.theta, th, tr.theta_star, config.k);
    tr.series.append(s.t, row);
    tr.hk_max = std::max(tr.hk_max, row[1]);
    if (!tr.margin_violation && detail::outside_margin(th, config.boundary_margin)) {
      tr.margin_violation = true;
      tr.margin_violation_time = s.t;
    }
    if (hooks.on_diagnostic) hooks.on_diagnostic(s.t, row);
  };
  auto record_snap = [&](const SimulationState& s) {
    tr.snapshots.push_back(s);
    if (hooks.on_snapshot) hooks.on_snapshot(s);
  };

  record_diag(state);
  record_snap(state);

  long diag_ticks = 1;
  long snap_ticks = 1;
  const double eps_t = 1e-12 * std::max(1.0, config.t_end);
  while (state.t < config.t_end - eps_t) {
    const double next_diag = std::min(config.t_end, diag_ticks * config.diagnostic_cadence);
    const double next_snap = std::min(config.t_end, snap_ticks * config.snapshot_cadence);
    const double next_event = std::min(next_diag, next_snap);
    double dt = cfl_dt(state.theta, config.cfl_safety, config.dt_max);
    const bool hits = state.t + dt >= next_event - eps_t;
    if (hits) dt = next_event - state.t;
    try {
      SimulationState next = step_rk4(state, dt, config.profile, config.nonlinear);
      if (hits) next.t = next_event;
      const double hk = sobolev_norm(next.theta, config.k);
      if (!(hk <= config.blowup_hk)) {
        throw BlowUp("blow-up guard: ||theta||_{H^k} = " + std::to_string(hk) + " at t = " + std::to_string(next.t));
      }
      state = std::move(next);
    } catch (const BlowUp& e) {
      tr.status = "aborted";
      tr.message = e.what();
      if (tr.snapshots.empty() || tr.snapshots.back().t != state.t) record_snap(state);
      break;
    }
    if (hits) {
      if (std::abs(state.t - next_diag) <= eps_t) {
        record_diag(state);
        ++diag_ticks;
      }
      if (std::abs(state.t - next_snap) <= eps_t) {
        record_snap(state);
        ++snap_ticks;
      }
    }
  }
  if (tr.completed() && tr.snapshots.back().t != state.t) record_snap(state);
  if (tr.completed() && tr.series.times().back() != state.t) record_diag(state);
  tr.steps = state.step_count;
  tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return tr;
}

}  // namespace ipm

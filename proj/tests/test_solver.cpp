#include <catch_amalgamated.hpp>

#include "ipm/initial_data.hpp"
#include "ipm/linear.hpp"
#include "ipm/solver.hpp"

using namespace ipm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Grid g(32, 128, 4.0 * pi);

SpectralField bump(const Grid& grid, double a) { return dealias(forward(gaussian_bump(grid, a))); }

double rel_diff(const SpectralField& a, const SpectralField& b) { return l2_norm(a - b) / l2_norm(b); }

SolverConfig config(const Grid& grid, double t_end) {
  SolverConfig c{grid, StratifiedProfile::affine(grid)};
  c.t_end = t_end;
  c.dt_max = 0.02;
  c.diagnostic_cadence = 0.02;
  c.snapshot_cadence = 1.0;
  return c;
}

}  // namespace

TEST_CASE("rhs") {
  const auto affine = StratifiedProfile::affine(g);
  CHECK(l2_norm(rhs(SpectralField(g), affine)) == 0.0);

  SECTION("single horizontal mode is an exact linear solution") {
    const double d = 1e-3;
    const auto theta = forward(RealField::sample(g, [d](double x1, double) { return d * std::sin(x1); }));
    CHECK(rel_diff(rhs(theta, affine), -1.0 * theta) < 1e-13);
  }
  SECTION("nonlinear part is quadratic") {
    auto nl = [&](double a) {
      const auto th = bump(g, a);
      return l2_norm(rhs(th, affine) - rhs(th, affine, false));
    };
    CHECK_THAT(nl(2e-3) / nl(1e-3), WithinRel(4.0, 1e-6));
    const auto th = bump(g, 1e-3);
    CHECK(l2_norm(rhs(th, affine) - rhs(th, affine, false)) < 1e-2 * l2_norm(rhs(th, affine, false)));
  }
  SECTION("linear-only rhs is the multiplier derivative") {
    const auto th = bump(g, 0.05);
    SpectralField expect = th;
    expect.for_each([](int n, double xi, Complex& c) {
      const double nn = double(n) * n;
      c *= n == 0 ? 0.0 : -nn / (nn + xi * xi);
    });
    CHECK(rel_diff(rhs(th, affine, false), expect) < 1e-14);
  }
  SECTION("non-affine profile term") {
    const auto prof = StratifiedProfile::affine_plus_periodic(g, {0.2});
    const auto th = bump(g, 0.05);
    const RealField u2 = inverse(velocity(th).u2);
    RealField term(g);
    for (int j = 0; j < g.n2(); ++j) {
      for (int i = 0; i < g.n1(); ++i) term(i, j) = -prof.derivative(g.x2(j)) * u2(i, j);
    }
    CHECK(rel_diff(rhs(th, prof, false), dealias(forward(term))) < 1e-13);
  }
}

TEST_CASE("cfl_dt") {
  CHECK(cfl_dt(SpectralField(g), 0.5, 0.3) == 0.3);
  const auto a = bump(g, 1e-2);
  const auto b = bump(g, 2e-2);
  CHECK_THAT(cfl_dt(b, 0.5, 1e9), WithinRel(0.5 * cfl_dt(a, 0.5, 1e9), 1e-12));
  CHECK_THAT(cfl_dt(a, 0.5, 1e9), WithinRel(0.5 * cfl_dt(a, 1.0, 1e9), 1e-15));
}

TEST_CASE("step_rk4") {
  const auto affine = StratifiedProfile::affine(g);
  const SimulationState zero{SpectralField(g), 0.0, 0};
  const auto z = step_rk4(zero, 0.1, affine);
  CHECK(l2_norm(z.theta) == 0.0);
  CHECK(z.step_count == 1);
  CHECK_THROWS_AS(step_rk4(zero, 0.0, affine), std::invalid_argument);

  SECTION("fourth order against evolve_exact") {
    const auto th = bump(g, 0.05);
    const auto exact = evolve_exact(LinearState{th, 0.0}, 1.0).theta;
    auto err = [&](int steps) {
      SimulationState s{th, 0.0, 0};
      for (int q = 0; q < steps; ++q) s = step_rk4(s, 1.0 / steps, affine, false);
      return rel_diff(s.theta, exact);
    };
    const double e1 = err(5);
    const double e2 = err(10);
    CHECK_THAT(e1 / e2, WithinRel(16.0, 0.1));
  }

  SECTION("energy decreases over a step") {
    const auto th = bump(g, 0.05);
    const auto star = stratified_reference(affine, th);
    const auto next = step_rk4({th, 0.0, 0}, 0.01, affine);
    CHECK(energy_moment(inverse(next.theta), star) < energy_moment(inverse(th), star));
  }

  SECTION("non-finite coefficients abort") {
    SpectralField bad = bump(g, 0.05);
    bad(1, 3) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_AS(step_rk4({bad, 0.0, 0}, 0.01, affine), BlowUp);
  }
}

TEST_CASE("incompressible advection and L2 growth bound") {
  const auto th = bump(g, 0.05) + dealias(forward(random_smooth(g, 3, 0.02)));
  const Velocity u = velocity(th);
  const RealField u1 = inverse(u.u1), u2 = inverse(u.u2);
  const RealField d1 = inverse(derivative(th, Axis::x1)), d2 = inverse(derivative(th, Axis::x2));
  const RealField t = inverse(th);
  double s = 0.0;
  for (std::size_t q = 0; q < t.values.size(); ++q) {
    s += (u1.values[q] * d1.values[q] + u2.values[q] * d2.values[q]) * t.values[q];
  }
  s *= g.dx1() * g.dx2();
  const double h1u = std::hypot(sobolev_norm(u.u1, 1.0), sobolev_norm(u.u2, 1.0));
  CHECK(std::abs(s) < 1e-10 * squared_l2(th) * h1u);

  const auto prof = StratifiedProfile::affine_plus_periodic(g, {0.2});
  const double dnorm = 2.0 * inner(th, rhs(th, prof));
  double max_drho = 0.0;
  for (double v : prof.drho_samples()) max_drho = std::max(max_drho, -v);
  const double ul2 = std::sqrt(squared_l2(u.u1) + squared_l2(u.u2));
  CHECK(dnorm <= 2.0 * max_drho * ul2 * l2_norm(th) + 1e-8);
}

TEST_CASE("zero run stays exactly zero") {
  auto c = config(g, 2.0);
  const auto tr = run(c, SpectralField(g));
  CHECK(tr.completed());
  for (const auto& name : tr.series.names()) {
    for (double v : tr.series.column(name)) CHECK(v == 0.0);
  }
  for (const auto& s : tr.snapshots) CHECK(l2_norm(s.theta) == 0.0);
  for (double v : tr.theta_star) CHECK(v == 0.0);
  CHECK(energy_balance(tr.series) == 0.0);
  CHECK_FALSE(tr.margin_violation);
}

TEST_CASE("linear-only run reproduces evolve_exact") {
  auto c = config(g, 3.0);
  c.nonlinear = false;
  c.dt_max = 1e-2;
  const auto th = bump(g, 0.05);
  const auto tr = run(c, th);
  REQUIRE(tr.completed());
  for (const auto& s : tr.snapshots) {
    CHECK(rel_diff(s.theta, evolve_exact({th, 0.0}, s.t).theta) < 1e-6);
  }
  CHECK(tr.series.times().size() == 151);
  CHECK(tr.snapshots.size() == 4);
}

TEST_CASE("nonlinear run properties") {
  auto c = config(g, 5.0);
  const auto th = bump(g, 0.05);
  const auto tr = run(c, th);
  REQUIRE(tr.completed());

  SECTION("mean is conserved") {
    for (const auto& s : tr.snapshots) CHECK(std::abs(s.theta(0, 0) - th(0, 0)) < 1e-15);
  }
  SECTION("energy strictly decreases and balances dissipation") {
    const auto& e = tr.series.column(columns::energy_E);
    for (std::size_t q = 1; q < e.size(); ++q) CHECK(e[q] < e[q - 1]);
    CHECK(energy_balance(tr.series) < 1e-3);
  }
  SECTION("moment energy matches the level-set energy") {
    const auto f = DensityField::from_profile(c.profile, inverse(tr.snapshots.back().theta));
    const auto dec = decompose(f);
    const double eh = potential_energy(dec);
    const double em = tr.series.column(columns::energy_E).back();
    // E(t) is measured against rho0*, 1/2||h||^2 against the current f*; they
    // agree while the rearrangement is (nearly) conserved.
    CHECK_THAT(em, WithinRel(eh, 0.02));
  }
  SECTION("stays within the initial H^k bound") { CHECK(tr.hk_max <= 1.1 * tr.hk_initial); }
  SECTION("cadence ticks land on exact multiples") {
    const auto& t = tr.series.times();
    CHECK(t.size() == 251);
    CHECK(t.back() == 5.0);
  }
}

TEST_CASE("blow-up guard aborts with the last valid state") {
  auto c = config(g, 1.0);
  c.blowup_hk = 1e-3;
  const auto tr = run(c, bump(g, 0.05));
  CHECK(tr.status == "aborted");
  CHECK(tr.message.find("blow-up guard") != std::string::npos);
  REQUIRE_FALSE(tr.snapshots.empty());
  CHECK(tr.snapshots.back().t == 0.0);
}

TEST_CASE("boundary margin flag") {
  auto c = config(g, 0.1);
  const auto wide = dealias(forward(gaussian_bump(g, 0.05, 5.0)));
  CHECK(run(c, wide).margin_violation);
  // The velocity kernel of mode n decays like exp(-|n| |x2|), so the clean case
  // needs exp(-0.9 L) far below the 1e-10 threshold.
  const Grid tall(32, 512, 12.0 * pi);
  CHECK_FALSE(run(config(tall, 0.1), bump(tall, 0.05)).margin_violation);
}

TEST_CASE("config validation") {
  auto c = config(g, 1.0);
  c.k = 2.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = config(g, 1.0);
  c.cfl_safety = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = config(g, 0.0);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

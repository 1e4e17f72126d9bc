#include <catch_amalgamated.hpp>

#include <random>

#include "ipm/linear.hpp"

using namespace ipm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("multiplier") {
  CHECK(multiplier(0, 3.0, 10.0) == 1.0);
  CHECK_THAT(multiplier(1, 0.0, 1.0), WithinRel(std::exp(-1.0), 1e-15));
  CHECK_THAT(multiplier(1, 1.0, 2.0), WithinRel(std::exp(-1.0), 1e-15));
  CHECK_THROWS_AS(multiplier(1, 1.0, -1e-3), std::invalid_argument);
}

TEST_CASE("evolve_exact") {
  const Grid g(32, 64, 4.0);
  SpectralField F(g);
  F(1, 0) = 2.0;
  F(0, 3) = Complex(1.0, 1.0);
  F(3, g.row_of_mode(-2)) = Complex(0.0, 0.5);
  const LinearState s0{F, 0.0};

  CHECK(evolve_exact(s0, 0.0).theta.coeffs == F.coeffs);
  const auto s1 = evolve_exact(s0, 1.0);
  CHECK(s1.t == 1.0);
  CHECK_THAT(s1.theta(1, 0).real(), WithinRel(2.0 * std::exp(-1.0), 1e-15));
  CHECK(s1.theta(0, 3) == F(0, 3));

  const auto split = evolve_exact(evolve_exact(s0, 0.3), 0.7);
  for (std::size_t q = 0; q < F.coeffs.size(); ++q) {
    CHECK(std::abs(split.theta.coeffs[q] - s1.theta.coeffs[q]) <= 1e-15 * std::abs(F.coeffs[q]) + 1e-300);
  }

  CHECK_THROWS(evolve_exact(s0, 1.0, StratifiedProfile::affine_plus_periodic(g, {0.1})));
  CHECK_NOTHROW(evolve_exact(s0, 1.0, StratifiedProfile::affine(g)));
}

TEST_CASE("nonzero modes decay strictly") {
  double prev = 1.0;
  for (double t = 0.5; t < 50; t += 0.5) {
    const double m = multiplier(2, 7.0, t);
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("weight_W") {
  CHECK_THAT(weight_W(4.0, 1, 1.0, 3.0, 0.0, 0.0), WithinRel(std::exp(-4.0) / 8.0, 1e-14));
  CHECK_THAT(weight_W(4.0, 1, 1.0, 3.0, 0.0, 0.0), WithinAbs(0.0022894, 1e-7));
  CHECK_THAT(weight_W(1.5, 2, 3.0, 3.0, 0.0, 3.0), WithinRel(multiplier(2, 3.0, 3.0), 1e-14));
  CHECK_THROWS(weight_W(1.0, 0, 1.0, 3.0, 0.0, 0.0));
  CHECK_THROWS(weight_W(1.0, 1, 1.0, 3.0, 2.0, 1.5));

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double k = 2.0 + 3.0 * u01(rng);
    const double s1 = k * u01(rng) * 0.5;
    const double s2 = (k - s1) * u01(rng);
    const int n = 1 + static_cast<int>(20 * u01(rng));
    const double xi = 100.0 * (u01(rng) - 0.5);
    const double t = std::exp(8.0 * u01(rng) - 2.0);
    // The bound needs n^{2 s1} <= (n^2+xi^2)^{s1}; holds since n^2 <= n^2 + xi^2.
    CHECK(weight_W(t, n, xi, k, s1, s2) <= weight_W_bound(t, k, s2) * (1.0 + 1e-12));
  }
}

TEST_CASE("sharpness data") {
  const Grid g(16, 1024, 32.0 * pi);
  const SharpnessSpec spec(3.0, 0.25, g);
  const auto F = sharpness_data(spec);
  CHECK(sharpness_amplitude(3.0, 0.25, 2.0) == 0.0625);
  CHECK(sharpness_amplitude(3.0, 0.25, 0.9) == 0.0);

  const double dxi = g.dxi();
  // xi = 2 is row m = 64
  CHECK_THAT(std::abs(F(1, 64)), WithinRel(0.0625 * std::sqrt(dxi), 1e-14));
  for (int r = 0; r < g.n2(); ++r) {
    for (int n = 0; n < g.half_n1(); ++n) {
      if (n != 1) CHECK(F(n, r) == Complex{});
    }
    if (std::abs(g.xi_of_row(r)) < 1.0 - dxi / 2) CHECK(F(1, r) == Complex{});
  }
  CHECK_THROWS(SharpnessSpec(3.0, 0.25, Grid(16, 64, 2.0)));
  CHECK_THROWS(SharpnessSpec(2.0, 0.25, g));
  CHECK_THROWS(SharpnessSpec(3.0, 1.0, g));
}

TEST_CASE("sharpness H^k norm converges with resolution") {
  // Doubling L and n2 together refines dxi on the same xi range; doubling n2
  // alone extends the range. Both should move the H^3 norm only slightly.
  auto hk = [](int n2, double L) {
    const SharpnessSpec spec(3.0, 0.25, Grid(16, n2, L));
    return sobolev_norm(sharpness_data(spec), 3.0);
  };
  const double a = hk(1024, 32 * pi);
  const double b = hk(2048, 64 * pi);
  const double c = hk(4096, 64 * pi);
  CHECK(std::abs(b - a) / b < 0.02);
  CHECK(std::abs(c - b) / c < 0.02);
}

TEST_CASE("oracle closed forms") {
  const Grid g(16, 256, 16 * pi);
  for (auto [k, eps] : {std::pair{2.5, 0.2}, {3.0, 0.25}, {4.0, 0.1}}) {
    const SharpnessSpec spec(k, eps, g);
    CHECK_THAT(linear_norm_oracle(spec, 0.0, LinearQuantity::L2), WithinRel(1.0 / (k + 2 * eps), 1e-10));
  }
  // Closed form for H2_of_U at t = 0: 2 * int_1^inf xi^{-2p} (2 + xi^4)/(1 + xi^2) dxi is not
  // elementary, so check against an independent midpoint sum instead.
  const SharpnessSpec spec(3.0, 0.25, g);
  double sum = 0.0;
  const double h = 1e-4;
  for (double x = 1.0 + h / 2; x < 200.0; x += h) {
    sum += std::pow(x, -8.0) * (2.0 + std::pow(x, 4)) / (1.0 + x * x) * h;
  }
  CHECK_THAT(linear_norm_oracle(spec, 0.0, LinearQuantity::H2_of_U), WithinRel(2.0 * sum, 1e-6));
  CHECK_THROWS(linear_norm_oracle(spec, -1.0, LinearQuantity::L2));
}

TEST_CASE("lower bound constant and inequality") {
  // int_0^1 e^{-2 eta} eta^4 d eta
  const double c4 = 0.75 - 0.25 * std::exp(-2.0) * (2.0 + 4.0 + 6.0 + 6.0 + 3.0);
  CHECK_THAT(sharpness_lower_constant(3.0), WithinRel(c4, 1e-12));
  const SharpnessSpec spec(3.0, 0.25, Grid(16, 256, 16 * pi));
  const double C = sharpness_lower_constant(3.0);
  for (double t : {1.0, 3.0, 10.0, 100.0, 1000.0}) {
    CHECK(linear_norm_oracle(spec, t, LinearQuantity::L2) >= C * std::pow(t, -3.5));
  }
}

TEST_CASE("grid matches oracle at t = 0 up to O(dxi)") {
  const SharpnessSpec spec(3.0, 0.25, Grid(16, 1024, 32 * pi));
  const auto F = sharpness_data(spec);
  const double grid = linear_norm_grid(F, LinearQuantity::L2);
  const double oracle = linear_norm_oracle(spec, 0.0, LinearQuantity::L2);
  CHECK(std::abs(grid - oracle) / oracle < 4.0 * spec.grid.dxi());
}

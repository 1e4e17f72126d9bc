#include <catch_amalgamated.hpp>

#include "ipm/initial_data.hpp"
#include "ipm/stratification.hpp"

using namespace ipm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Grid g64(64, 256, 4.0 * pi);

DensityField windowed(const Grid& g, double a) {
  return DensityField::sample_perturbation(
      g, [a](double x1, double x2) { return a * std::sin(x1) * std::exp(-x2 * x2); });
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("level_curve examples") {
  const auto affine = DensityField::sample_perturbation(g64, [](double, double) { return 0.0; });
  CHECK_THAT(level_curve(affine, 0.3, 5), WithinAbs(-0.3, 1e-12));

  const auto shifted = DensityField::sample_perturbation(g64, [](double x1, double) { return 0.1 * std::sin(x1); });
  CHECK_THAT(level_curve(shifted, 0.0, g64.n1() / 4), WithinAbs(0.1, 1e-12));

  const auto f = windowed(g64, 0.1);
  for (int i : {0, 7, 19, 40}) {
    for (double s : {-2.0, -0.4, 0.0, 0.35, 1.7}) {
      const double phi = level_curve(f, s, i);
      const double x1 = g64.x1(i);
      CHECK(std::abs(-phi + 0.1 * std::sin(x1) * std::exp(-phi * phi) - s) < 1e-12);
    }
  }
}

TEST_CASE("level_curve errors") {
  const auto f = windowed(g64, 0.1);
  CHECK_THROWS_AS(level_curve(f, 20.0, 0), std::out_of_range);
  const auto overturned = DensityField::sample_perturbation(
      g64, [](double, double x2) { return 2.0 * std::sin(x2) * std::exp(-0.1 * x2 * x2); });
  CHECK_THROWS_AS(level_curve(overturned, 0.0, 0), MonotonicityError);
  CHECK_THROWS_AS(decompose(overturned), MonotonicityError);
}

TEST_CASE("decompose affine") {
  const auto f = DensityField::sample_perturbation(g64, [](double, double) { return 0.0; });
  const auto dec = decompose(f);
  CHECK(dec.levels() == 512);
  for (std::size_t q = 0; q < dec.levels(); ++q) CHECK_THAT(dec.phi0[q], WithinAbs(-dec.s[q], 1e-12));
  CHECK(max_abs(dec.h) < 1e-12);
  for (int j = 0; j < g64.n2(); ++j) CHECK_THAT(dec.f_star[j], WithinAbs(-g64.x2(j), 1e-12));
  CHECK(potential_energy(dec) < 1e-20);
  CHECK_THAT(potential_energy_direct(f, dec, 5.0), WithinAbs(0.0, 1e-10));
}

TEST_CASE("decompose x2-independent perturbation") {
  const double a = 0.1;
  const auto f = DensityField::sample_perturbation(g64, [a](double x1, double) { return a * std::sin(x1); });
  const auto dec = decompose(f);
  for (std::size_t q = 0; q < dec.levels(); q += 37) {
    CHECK_THAT(dec.phi0[q], WithinAbs(-dec.s[q], 1e-12));
    for (int i = 0; i < g64.n1(); i += 5) CHECK_THAT(dec.h_at(i, q), WithinAbs(a * std::sin(g64.x1(i)), 1e-12));
  }
  for (int j = dec.star_row_lo; j <= dec.star_row_hi; ++j) CHECK_THAT(dec.f_star[j], WithinAbs(-g64.x2(j), 1e-10));
}

TEST_CASE("decompose Gaussian-windowed field") {
  const auto f = windowed(g64, 0.1);
  const auto dec = decompose(f);

  SECTION("first-order h") {
    double err = 0.0;
    for (std::size_t q = 0; q < dec.levels(); ++q) {
      const double s = dec.s[q];
      for (int i = 0; i < g64.n1(); ++i) {
        err = std::max(err, std::abs(dec.h_at(i, q) - 0.1 * std::sin(g64.x1(i)) * std::exp(-s * s)));
      }
    }
    // second-order term 2 a^2 s e^{-2 s^2} (sin^2 x1 - 1/2) peaks near 3e-3
    CHECK(err < 4e-3);
  }

  SECTION("exact scalar roots") {
    // Newton on the analytic column, independent of the interpolant.
    auto root = [](double x1, double s) {
      double p = -s;
      for (int it = 0; it < 50; ++it) {
        const double e = 0.1 * std::sin(x1) * std::exp(-p * p);
        p -= (-p + e - s) / (-1.0 - 2.0 * p * e);
      }
      return p;
    };
    double err = 0.0;
    for (std::size_t q = 0; q < dec.levels(); q += 7) {
      std::vector<double> phi(g64.n1());
      double mean = 0.0;
      for (int i = 0; i < g64.n1(); ++i) mean += (phi[i] = root(g64.x1(i), dec.s[q]));
      mean /= g64.n1();
      err = std::max(err, std::abs(dec.phi0[q] - mean));
      for (int i = 0; i < g64.n1(); ++i) err = std::max(err, std::abs(dec.h_at(i, q) - (phi[i] - mean)));
    }
    CHECK(err < 1e-10);
  }

  SECTION("invariants") {
    const double hmax = max_abs(dec.h);
    for (std::size_t q = 0; q < dec.levels(); ++q) {
      double mean = 0.0;
      for (int i = 0; i < g64.n1(); ++i) mean += dec.h_at(i, q);
      CHECK(std::abs(mean / g64.n1()) <= 1e-10 * hmax);
      if (q > 0) CHECK(dec.phi0[q] < dec.phi0[q - 1]);
    }
    for (std::size_t q = 0; q < dec.levels(); q += 11) {
      CHECK_THAT(stratified_value(dec, dec.phi0[q]), WithinAbs(dec.s[q], 1e-8));
    }
  }

  SECTION("finer vertical grid gives the same decomposition") {
    const Grid fine(64, 1024, 4.0 * pi);
    const auto ff = windowed(fine, 0.1);
    LevelGrid lg = LevelGrid::automatic(f);
    const auto dfine = decompose(ff, lg);
    double err = 0.0;
    for (std::size_t q = 0; q < dec.levels(); ++q) {
      err = std::max(err, std::abs(dfine.phi0[q] - dec.phi0[q]));
      for (int i = 0; i < g64.n1(); ++i) err = std::max(err, std::abs(dfine.h_at(i, q) - dec.h_at(i, q)));
    }
    CHECK(err < 1e-10);
  }
}

TEST_CASE("potential energy") {
  SECTION("perturbative value and quadratic scaling") {
    const double e1 = 0.5 * 0.01 * pi * std::sqrt(pi / 2.0);
    CHECK_THAT(e1, WithinAbs(0.01969, 1e-5));
    const auto f1 = windowed(g64, 0.1);
    const auto d1 = decompose(f1);
    CHECK_THAT(potential_energy(d1), WithinRel(e1, 0.05));
    const auto f2 = windowed(g64, 0.02);
    const auto d2 = decompose(f2);
    CHECK_THAT(potential_energy(d2), WithinRel(e1 * 0.04, 0.01));
    CHECK(endpoint_decay_ratio(d1) < 1e-8);
  }

  SECTION("direct cutoff form agrees") {
    const auto f = windowed(g64, 0.1);
    const auto dec = decompose(f);
    const double eh = potential_energy(dec);
    const double ed = potential_energy_direct(f, dec, admissible_cutoff(dec));
    CHECK(std::abs(eh - ed) <= std::max(1e-6, 0.02 * eh));
    // Cauchy differences shrink as the cutoff grows.
    const double c = admissible_cutoff(dec);
    const double a1 = potential_energy_direct(f, dec, 1.0);
    const double a2 = potential_energy_direct(f, dec, 2.0);
    const double a3 = potential_energy_direct(f, dec, 4.0);
    const double a4 = potential_energy_direct(f, dec, c);
    CHECK(std::abs(a3 - a2) < std::abs(a2 - a1));
    CHECK(std::abs(a4 - a3) <= std::abs(a3 - a2));
    CHECK_THROWS(potential_energy_direct(f, dec, 2.0 * c));
  }

  SECTION("separable h") {
    // h = a sin(x1) w(s), w a smoothed indicator of [0, 1]
    const double a = 0.1;
    auto w = [](double s) { return 0.5 * (std::tanh(20.0 * s) - std::tanh(20.0 * (s - 1.0))); };
    LevelSetDecomposition dec{g64, {}, {}, {}, {}, {}};
    const int nl = 4001;
    for (int q = 0; q < nl; ++q) {
      const double s = -1.0 + 3.0 * q / (nl - 1);
      dec.s.push_back(s);
      for (int i = 0; i < g64.n1(); ++i) dec.h.push_back(a * std::sin(g64.x1(i)) * w(s));
    }
    double w2 = 0.0;
    for (int q = 0; q + 1 < nl; ++q) {
      const double m = 0.5 * (dec.s[q] + dec.s[q + 1]);
      w2 += w(m) * w(m) * (dec.s[q + 1] - dec.s[q]);
    }
    CHECK_THAT(potential_energy(dec), WithinRel(0.5 * a * a * pi * w2, 1e-5));
  }
}

TEST_CASE("distribution measure") {
  const auto affine = DensityField::sample_perturbation(g64, [](double, double) { return 0.0; });
  const Window w = Window::interior(g64, default_margin(g64));
  // window is symmetric about x2 = 0
  CHECK_THAT(distribution_measure(affine, 0.0, w), WithinRel(0.5 * w.area(g64), 1e-12));

  const auto f = windowed(g64, 0.1);
  double prev = std::numeric_limits<double>::infinity();
  for (double s = -8.0; s <= 8.0; s += 0.25) {
    const double m = distribution_measure(f, s, w);
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("rearrangement preserves the distribution function") {
  const Grid g(64, 512, 4.0 * pi);
  const auto f = windowed(g, 0.1);
  const auto dec = decompose(f);
  const auto fs = stratified_density(dec);
  const Window w = Window::interior(g, default_margin(g));
  const double area = w.area(g);
  for (int q = 0; q < 50; ++q) {
    const double s = -3.0 + 6.0 * q / 49.0;
    CHECK(std::abs(distribution_measure(f, s, w) - distribution_measure(fs, s, w)) <= 1e-6 * area);
  }
}

TEST_CASE("stratification stability") {
  const auto f = windowed(g64, 0.1);
  CHECK(stratification_stability(f, f) == 0.0);

  auto perturbed = [&](double eps) {
    DensityField fn = f;
    for (int j = 0; j < g64.n2(); ++j) {
      const double chi = std::exp(-0.5 * g64.x2(j) * g64.x2(j));
      for (int i = 0; i < g64.n1(); ++i) fn.periodic(i, j) += eps * std::sin(g64.x1(i)) * chi;
    }
    return fn;
  };
  auto gap = [&](double eps) { return stratification_stability(f, perturbed(eps)); };
  auto dist = [&](double eps) {
    const auto fn = perturbed(eps);
    double s = 0.0;
    for (std::size_t q = 0; q < fn.periodic.values.size(); ++q) {
      const double d = fn.periodic.values[q] - f.periodic.values[q];
      s += d * d;
    }
    return std::sqrt(s * g64.dx1() * g64.dx2());
  };
  CHECK(gap(1e-3) <= 10.0 * dist(1e-3));
  // The x1-mean of a sin(x1) perturbation is zero, so the gap is second order
  // in the cross term; probe linearity with an x1-independent component too.
  auto shifted = [&](double eps) {
    DensityField fn = f;
    for (int j = 0; j < g64.n2(); ++j) {
      const double chi = std::exp(-0.5 * g64.x2(j) * g64.x2(j));
      for (int i = 0; i < g64.n1(); ++i) fn.periodic(i, j) += eps * chi;
    }
    return stratification_stability(f, fn);
  };
  const double full = shifted(2e-3);
  const double half = shifted(1e-3);
  CHECK_THAT(full / half, WithinRel(2.0, 0.2));
}

TEST_CASE("seeded family: energy bands") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto theta = random_smooth(g64, seed, 0.1);
    REQUIRE(max_vertical_slope(theta) <= 0.5);
    const DensityField f{theta, 1.0};
    const auto dec = decompose(f);
    const auto rep = potential_energy_report(f, dec);
    CAPTURE(seed, rep.energy_h, rep.energy_direct, rep.l2_gap);
    CHECK(std::abs(rep.energy_h - rep.energy_direct) <= std::max(1e-6, 0.02 * rep.energy_h));
    CHECK(rep.ratio_lower >= 0.05);
    CHECK(rep.ratio_upper <= 20.0);
    CHECK_FALSE(rep.endpoint_warning);

    const double d1 = l2_norm(inverse(derivative(forward(theta), Axis::x1)));
    CHECK(d1 / rep.l2_gap >= 0.05);
    CHECK(interpolation_ratio(rep.energy_h, forward(theta), 3.0) < 10.0);
  }
}

TEST_CASE("exports") {
  const auto f = windowed(g64, 0.1);
  const auto dec = decompose(f);
  const auto dir = std::filesystem::temp_directory_path() / "ipm_strat_export";
  std::filesystem::create_directories(dir);
  write_decomposition_csv(dir / "levels.csv", dec);
  write_h_block(dir / "h.bin", dec);
  write_f_star(dir / "f_star.csv", dec);
  std::ifstream is(dir / "levels.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "s,phi0,h_rms,h_max");
  CHECK(std::filesystem::file_size(dir / "h.bin") == 16 + 8 * dec.levels() * (1 + g64.n1()));
  std::filesystem::remove_all(dir);
}

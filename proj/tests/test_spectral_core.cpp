#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rotcouette/fft.hpp"
#include "rotcouette/spectral_core.hpp"
#include "test_support.hpp"

using namespace rotcouette;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("w symbol values", "[spectral_core]") {
  CHECK(w_symbol(0.0, {1, 0.0, 0}) == 1.0);
  CHECK(w_symbol(2.0, {1, 2.0, 0}) == 1.0);  // critical time t = eta/k
  CHECK(w_symbol(3.0, {2, 1.0, 1}) == 4.0 + 25.0 + 1.0);
  CHECK(w_dot_symbol(0.0, {1, 2.0, 0}) == -4.0);
  CHECK(w_symbol(5.0, {0, 1.5, 2}) == 1.5 * 1.5 + 4.0);
  CHECK_THAT(nabla_L_magnitude(1.0, {1, 1.0, 1}), WithinRel(std::sqrt(2.0), 1e-15));
}

TEST_CASE("integral_w matches Gauss-Kronrod quadrature", "[spectral_core]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> kd(-8, 8);
  std::uniform_real_distribution<double> ed(-50.0, 50.0), td(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    const WaveVector kv{kd(rng), ed(rng), kd(rng)};
    const double t = td(rng);
    const double ref = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double s) { return w_symbol(s, kv); }, 0.0, t, 5, 1e-14);
    CHECK_THAT(integral_w(t, kv), WithinRel(ref, 1e-12));
    const double a = 0.3 * t;
    CHECK_THAT(integral_w_between(a, t, kv) + integral_w(a, kv), WithinRel(ref, 1e-12));
  }
}

TEST_CASE("integral_w edge cases", "[spectral_core]") {
  CHECK(integral_w(0.0, {3, 1.0, 2}) == 0.0);
  CHECK_THROWS_AS(integral_w(-1.0, {1, 0.0, 0}), std::invalid_argument);
  // k = 0: w is constant
  CHECK_THAT(integral_w(4.0, {0, 2.0, 1}), WithinRel(20.0, 1e-15));
}

TEST_CASE("GridSpec validation and indexing", "[spectral_core]") {
  GridSpec g;
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS((GridSpec{15, 64, 16, 32.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{16, 0, 16, 32.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{16, 64, 16, 0.0}.validate()), std::invalid_argument);
  CHECK(GridSpec::wavenumber(0, 16) == 0);
  CHECK(GridSpec::wavenumber(7, 16) == 7);
  CHECK(GridSpec::wavenumber(8, 16) == -8);
  CHECK(GridSpec::wavenumber(15, 16) == -1);
  for (int q = -7; q <= 7; ++q) CHECK(GridSpec::wavenumber(GridSpec::index_of(q, 16), 16) == q);
  CHECK(GridSpec::dealias_max(16) == 5);
  CHECK(GridSpec::dealias_max(64) == 21);
  CHECK_THAT(g.eta_cutoff(), WithinRel(2.0 * pi * 21 / 32.0, 1e-15));
}

TEST_CASE("sobolev_norm of a single mode", "[spectral_core]") {
  GridSpec g;
  SpectralField f(g);
  f.at(1, 0, 0) = 1.0;
  CHECK_THAT(sobolev_norm(f, 1.0), WithinRel(std::sqrt(2.0 * g.cell_measure()), 1e-15));
  CHECK_THAT(sobolev_norm(f, 0.0), WithinRel(std::sqrt(g.cell_measure()), 1e-15));
  CHECK(sobolev_norm(SpectralField(g), 3.0) == 0.0);
  CHECK_THROWS_AS(sobolev_norm(f, -1.0), std::invalid_argument);
}

TEST_CASE("L2 norm equals physical-space quadrature", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SpectralField f = testing::random_field(g, seed, 2);
    // mean of |f|^2 over the grid, times the y-length (x and z averaged)
    double sum = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int m = 0; m < g.nz; ++m) sum += std::norm(testing::direct_eval(f, i, j, m));
    const double l2 = std::sqrt(sum / double(g.size()) * g.ly);
    CHECK_THAT(sobolev_norm(f, 0.0), WithinRel(l2, 1e-10));
  }
}

TEST_CASE("sobolev_norm is monotone in s and homogeneous", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  SpectralField f = testing::random_field(g, 5);
  double prev = 0.0;
  for (double s : {0.0, 0.5, 1.0, 2.0, 3.5}) {
    const double n = sobolev_norm(f, s);
    CHECK(n >= prev);
    prev = n;
  }
  const double n1 = sobolev_norm(f, 2.0);
  f *= -3.0;
  CHECK_THAT(sobolev_norm(f, 2.0), WithinRel(3.0 * n1, 1e-14));
}

TEST_CASE("zero and non-zero projections split a field", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  const SpectralField f = testing::random_field(g, 9);
  const SpectralField z = project_zero(f);
  const SpectralField nz = project_nonzero(f);
  const SpectralField sum = z + nz;
  for (std::size_t n = 0; n < f.coeffs().size(); ++n) CHECK(sum[n] == f[n]);
  CHECK(std::abs(inner_product(z, nz)) == 0.0);
  const double a = sobolev_norm(z, 1.0), b = sobolev_norm(nz, 1.0);
  CHECK_THAT(std::hypot(a, b), WithinRel(sobolev_norm(f, 1.0), 1e-14));
  f.for_each_mode([&](std::size_t n, int k, int, int) {
    if (k == 0) CHECK(nz[n] == complex{});
    else CHECK(z[n] == complex{});
  });
}

TEST_CASE("dealias clears the outer third", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  SpectralField f(g);
  for (auto& c : f.coeffs()) c = 1.0;
  dealias(f);
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    CHECK((f[n] == complex(1.0)) == g.retained(k, jy, l));
  });
}

TEST_CASE("enforce_hermitian yields real physical fields", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  SpectralField f(g);
  for (auto& c : f.coeffs()) c = complex(nd(rng), nd(rng));
  CHECK(hermitian_defect(f) > 0.1);
  enforce_hermitian(f);
  CHECK(hermitian_defect(f) < 1e-15);
  FftPlan3d plan(g);
  std::vector<complex> buf(f.coeffs().begin(), f.coeffs().end());
  plan.to_physical(buf);
  double worst = 0.0, scale = 0.0;
  for (auto& c : buf) {
    worst = std::max(worst, std::abs(c.imag()));
    scale = std::max(scale, std::abs(c));
  }
  CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("FFT wrapper matches direct evaluation and round-trips", "[spectral_core]") {
  const GridSpec g = testing::small_grid();
  const SpectralField f = testing::random_field(g, 21, 2);
  FftPlan3d plan(g);
  std::vector<complex> buf(f.coeffs().begin(), f.coeffs().end());
  plan.to_physical(buf);
  for (int i = 0; i < g.nx; i += 3)
    for (int j = 0; j < g.ny; j += 5)
      for (int m = 0; m < g.nz; m += 2) {
        const complex ref = testing::direct_eval(f, i, j, m);
        CHECK(std::abs(buf[g.flat(i, j, m)] - ref) < 1e-10);
      }
  plan.to_spectral(buf);
  for (std::size_t n = 0; n < buf.size(); ++n) CHECK(std::abs(buf[n] - f[n]) < 1e-12);
  std::vector<complex> wrong(3);
  CHECK_THROWS_AS(plan.forward(wrong), std::invalid_argument);
}

TEST_CASE("high_eta_energy_fraction", "[spectral_core]") {
  GridSpec g;
  SpectralField f(g);
  f.at(1, 1, 0) = 1.0;
  CHECK(high_eta_energy_fraction(f) == 0.0);
  f.at(1, GridSpec::dealias_max(g.ny), 0) = 1.0;
  CHECK_THAT(high_eta_energy_fraction(f), WithinRel(0.5, 1e-15));
  CHECK(high_eta_energy_fraction(SpectralField(g)) == 0.0);
}

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "rotcouette/nonlinear_sim.hpp"
#include "rotcouette/spectral_core.hpp"
#include "rotcouette/velocity_field.hpp"

namespace testing {

using rotcouette::complex;

/// Classical RK4 for y' = f(t, y) with a fixed number of steps.
template <class State, class F>
State rk4(F&& f, State y, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const State k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const State k4 = f(t + h, y + h * k3);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// Small fixed-size vector with the arithmetic rk4 needs.
template <class T, std::size_t N>
struct Vec {
  std::array<T, N> v{};
  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }
  friend Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < N; ++i) a.v[i] += b.v[i];
    return a;
  }
  friend Vec operator*(double s, Vec a) {
    for (auto& x : a.v) x *= s;
    return a;
  }
};

/// Hermitian random field supported on modes with |k|, |jy|, |l| <= band,
/// inside the dealiased region.
inline rotcouette::SpectralField random_field(const rotcouette::GridSpec& g, std::uint64_t seed,
                                              int band = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  rotcouette::SpectralField f(g);
  for (int k = -band; k <= band; ++k)
    for (int j = -band; j <= band; ++j)
      for (int l = -band; l <= band; ++l)
        if (g.retained(k, j, l)) f.at(k, j, l) = complex(n(rng), n(rng));
  rotcouette::enforce_hermitian(f);
  f.at(0, 0, 0) = 0.0;
  return f;
}

/// Divergence-free random velocity at time t.
inline rotcouette::VelocityField random_velocity(const rotcouette::GridSpec& g,
                                                 std::uint64_t seed, double t = 0.0,
                                                 int band = 3) {
  rotcouette::VelocityField U(g, t);
  for (int c = 0; c < 3; ++c) U.u[c] = random_field(g, seed * 7 + c, band);
  U.set_time(t);
  return rotcouette::leray_project_L(U, t);
}

/// Direct (non-FFT) evaluation of a coefficient field at grid point
/// (x_i, y_j, z_m) with x_i = 2 pi i / nx, y_j = ly j / ny, z_m = 2 pi m / nz.
inline complex direct_eval(const rotcouette::SpectralField& f, int i, int j, int m) {
  const auto& g = f.grid();
  const double x = 2.0 * rotcouette::pi * i / g.nx;
  const double y = g.ly * j / g.ny;
  const double z = 2.0 * rotcouette::pi * m / g.nz;
  complex sum{};
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    if (f[n] == complex{}) return;
    sum += f[n] * std::exp(complex(0.0, k * x + g.eta_of(jy) * y + l * z));
  });
  return sum;
}

inline rotcouette::GridSpec small_grid() { return {8, 16, 8, 8.0}; }

}  // namespace testing

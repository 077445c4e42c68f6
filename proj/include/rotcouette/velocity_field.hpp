#pragma once

// Moving-frame velocity fields and the time-dependent linear operators that
// act on them mode by mode.

#include <array>
#include <cmath>

#include "spectral_core.hpp"

namespace rotcouette {

struct VelocityField {
  std::array<SpectralField, 3> u;

  VelocityField() = default;
  explicit VelocityField(const GridSpec& grid, double t = 0.0)
      : u{SpectralField(grid, t), SpectralField(grid, t), SpectralField(grid, t)} {}

  const GridSpec& grid() const { return u[0].grid(); }
  double time() const { return u[0].time(); }
  void set_time(double t) {
    for (auto& c : u) c.set_time(t);
  }
  std::size_t size() const { return u[0].coeffs().size(); }

  SpectralField& operator[](int i) { return u[i]; }
  const SpectralField& operator[](int i) const { return u[i]; }

  void set_zero() {
    for (auto& c : u) c.set_zero();
  }

  VelocityField& operator+=(const VelocityField& o) {
    for (int c = 0; c < 3; ++c) u[c] += o.u[c];
    return *this;
  }
  VelocityField& operator*=(double s) {
    for (auto& c : u) c *= s;
    return *this;
  }

  /// Calls fn(flat_index, wave_vector) for every mode.
  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    const GridSpec& g = grid();
    u[0].for_each_mode([&](std::size_t n, int k, int jy, int l) {
      fn(n, WaveVector{k, g.eta_of(jy), l});
    });
  }
};

/// sum_c ||u_c||_{H^s}^2, square-rooted.
inline double sobolev_norm(const VelocityField& v, double s) {
  double sum = 0.0;
  for (const auto& c : v.u) {
    const double n = sobolev_norm(c, s);
    sum += n * n;
  }
  return std::sqrt(sum);
}

inline VelocityField project_zero(const VelocityField& v) {
  VelocityField out;
  for (int c = 0; c < 3; ++c) out.u[c] = project_zero(v.u[c]);
  return out;
}

inline VelocityField project_nonzero(const VelocityField& v) {
  VelocityField out;
  for (int c = 0; c < 3; ++c) out.u[c] = project_nonzero(v.u[c]);
  return out;
}

/// f - grad_L Delta_L^{-1} (grad_L . f) with symbols i(k, eta - kt, l).
/// The (0, 0, 0) mode is returned as zero.
inline VelocityField leray_project_L(const VelocityField& f, double t) {
  VelocityField out(f.grid(), t);
  f.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const double q[3] = {double(kv.k), kv.eta - kv.k * t, double(kv.l)};
    const double w = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
    if (w == 0.0) return;
    const complex dot = q[0] * f.u[0][n] + q[1] * f.u[1][n] + q[2] * f.u[2][n];
    for (int c = 0; c < 3; ++c) out.u[c][n] = f.u[c][n] - q[c] * dot / w;
  });
  return out;
}

/// Non-diffusive linear terms of the momentum equation with Coriolis
/// coefficient beta (shear rate 1):
///   -((1 - beta) U2, beta U1, 0) + grad_L (-Delta_L)^{-1} ((2 - beta) d_X U2 + beta d_Y^L U1).
/// For beta = 1 and per mode with xi = eta - kt, s = (k U2 + xi U1) / w this is
/// (k s, -U1 + xi s, l s).
inline VelocityField linear_rhs(const VelocityField& U, double t, double beta = 1.0) {
  VelocityField out(U.grid(), t);
  U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const double w = w_symbol(t, kv);
    if (w == 0.0) return;
    const double xi = kv.eta - kv.k * t;
    const complex s =
        ((2.0 - beta) * double(kv.k) * U.u[1][n] + beta * xi * U.u[0][n]) / w;
    out.u[0][n] = double(kv.k) * s - (1.0 - beta) * U.u[1][n];
    out.u[1][n] = -beta * U.u[0][n] + xi * s;
    out.u[2][n] = double(kv.l) * s;
  });
  return out;
}

/// max over modes of |k U1 + (eta - kt) U2 + l U3|.
inline double max_divergence(const VelocityField& U, double t) {
  double worst = 0.0;
  U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const complex d = double(kv.k) * U.u[0][n] + (kv.eta - kv.k * t) * U.u[1][n] +
                      double(kv.l) * U.u[2][n];
    worst = std::max(worst, std::abs(d));
  });
  return worst;
}

}  // namespace rotcouette

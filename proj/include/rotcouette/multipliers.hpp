#pragma once

// Time- and frequency-dependent Fourier multipliers m and M.
//
// m balances the transient growth of the stretching term over the window
// t in [eta/k, eta/k + c nu^{-1/3}] (c = 1000 by default):
//   m'/m = 2k(eta - kt)/w inside the window, 0 outside, m(0) = 1.
// M is the ghost multiplier
//   M'/M = -nu^{1/3} / (1 + nu^{2/3} (t - eta/k)^2),  M(0) = 1,
// whose closed form is exp(-atan(nu^{1/3}(t - eta/k)) - atan(nu^{1/3} eta/k)).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "spectral_core.hpp"

namespace rotcouette {

struct MultiplierParams {
  double nu = 1e-3;
  double window_constant = 1000.0;

  void validate() const {
    if (!(nu > 0.0 && nu < 1.0))
      throw std::invalid_argument("MultiplierParams: nu must lie in (0, 1)");
    if (!(window_constant > 0.0))
      throw std::invalid_argument("MultiplierParams: window_constant must be > 0");
  }
  double window_length() const { return window_constant / std::cbrt(nu); }
};

/// Start and end of the active window of m for a k != 0 mode.
struct MWindow {
  double start;
  double end;
};

inline MWindow m_window(const WaveVector& kv, const MultiplierParams& p) {
  const double a = kv.eta / kv.k;
  return {a, a + p.window_length()};
}

/// Closed-form m(t, k, eta, l).
inline double m_exact(double t, const WaveVector& kv, const MultiplierParams& p) {
  if (kv.k == 0) return 1.0;
  const double len = p.window_length();
  const double a = kv.eta / kv.k;
  const double k2 = double(kv.k) * kv.k;
  const double l2 = double(kv.l) * kv.l;
  const double frozen_w = k2 + k2 * len * len + l2;
  if (a < -len) return 1.0;
  if (a < 0.0) {
    const double w0 = k2 + kv.eta * kv.eta + l2;
    return t < a + len ? w0 / w_symbol(t, kv) : w0 / frozen_w;
  }
  if (t < a) return 1.0;
  if (t < a + len) return (k2 + l2) / w_symbol(t, kv);
  return (k2 + l2) / frozen_w;
}

/// Right-hand side of the m equation, m'/m.
inline double m_log_derivative(double t, const WaveVector& kv,
                               const MultiplierParams& p) {
  if (kv.k == 0) return 0.0;
  const MWindow win = m_window(kv, p);
  if (t < win.start || t > win.end) return 0.0;
  return 2.0 * kv.k * (kv.eta - kv.k * t) / w_symbol(t, kv);
}

/// |d/dt log m_exact - m'/m| by central differences. Throws std::domain_error
/// when t is within one stencil width of a window edge, where m is not
/// differentiable.
inline double m_ode_residual(double t, const WaveVector& kv, const MultiplierParams& p) {
  if (kv.k == 0) return 0.0;
  const MWindow win = m_window(kv, p);
  const double h = 1e-5 * std::max(1.0, std::abs(t - win.start));
  if (std::abs(t - win.start) <= 2.0 * h || std::abs(t - win.end) <= 2.0 * h)
    throw std::domain_error("m_ode_residual: t is at a window switching time");
  const double tp = t + h;
  const double tm = t - h;
  const double fd = (std::log(m_exact(tp, kv, p)) - std::log(m_exact(tm, kv, p))) /
                    (tp - tm);
  return std::abs(fd - m_log_derivative(t, kv, p));
}

/// Closed-form M(t, k, eta, l); always in [e^{-pi}, 1].
inline double M_closed(double t, const WaveVector& kv, const MultiplierParams& p) {
  if (kv.k == 0) return 1.0;
  const double c = std::cbrt(p.nu);
  const double a = kv.eta / kv.k;
  return std::exp(-std::atan(c * (t - a)) - std::atan(c * a));
}

/// M'/M.
inline double M_log_derivative(double t, const WaveVector& kv,
                               const MultiplierParams& p) {
  if (kv.k == 0) return 0.0;
  const double c = std::cbrt(p.nu);
  const double s = c * (t - kv.eta / kv.k);
  return -c / (1.0 + s * s);
}

/// sqrt(-M' M), the weight of the ghost-multiplier dissipation term.
inline double sqrt_minus_Mdot_M(double t, const WaveVector& kv,
                                const MultiplierParams& p) {
  const double m = M_closed(t, kv, p);
  return m * std::sqrt(-M_log_derivative(t, kv, p));
}

/// nu^{-1/6} sqrt(-M' M) + nu^{1/3} |k, eta - kt, l|, bounded below for k != 0.
inline double M_coercivity(double t, const WaveVector& kv, const MultiplierParams& p) {
  return std::pow(p.nu, -1.0 / 6.0) * sqrt_minus_Mdot_M(t, kv, p) +
         std::cbrt(p.nu) * nabla_L_magnitude(t, kv);
}

/// One evaluation point for the bound checks; nu may vary per sample.
struct MultiplierSample {
  double t = 0.0;
  WaveVector kv{};
  double nu = 1e-3;
};

struct MBoundsReport {
  double max_m = 0.0;
  /// Smallest c1 with m >= c1 nu^{2/3} over the samples.
  double c1 = std::numeric_limits<double>::infinity();
  /// Smallest c2 with m >= c2 (k^2 + l^2) / w over the samples.
  double c2 = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  bool ok = false;
};

inline MBoundsReport check_m_bounds(std::span<const MultiplierSample> samples,
                                    double window_constant = 1000.0) {
  MBoundsReport r;
  for (const auto& s : samples) {
    const MultiplierParams p{s.nu, window_constant};
    const double m = m_exact(s.t, s.kv, p);
    r.max_m = std::max(r.max_m, m);
    r.c1 = std::min(r.c1, m / std::pow(s.nu, 2.0 / 3.0));
    const double h2 = double(s.kv.k) * s.kv.k + double(s.kv.l) * s.kv.l;
    if (h2 > 0.0) r.c2 = std::min(r.c2, m * w_symbol(s.t, s.kv) / h2);
    ++r.count;
  }
  r.ok = r.count > 0 && r.max_m <= 1.0 && r.c1 > 0.0 && r.c2 > 0.0;
  return r;
}

struct MBoundsCoercivityReport {
  double min_M = std::numeric_limits<double>::infinity();
  double max_M = 0.0;
  /// Observed infimum of M_coercivity over k != 0 samples.
  double coercivity_inf = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  bool ok = false;
};

inline MBoundsCoercivityReport check_M_bounds_and_coercivity(
    std::span<const MultiplierSample> samples) {
  MBoundsCoercivityReport r;
  for (const auto& s : samples) {
    const MultiplierParams p{s.nu};
    const double M = M_closed(s.t, s.kv, p);
    r.min_M = std::min(r.min_M, M);
    r.max_M = std::max(r.max_M, M);
    if (s.kv.k != 0) r.coercivity_inf = std::min(r.coercivity_inf, M_coercivity(s.t, s.kv, p));
    ++r.count;
  }
  r.ok = r.count > 0 && r.min_M >= std::exp(-pi) && r.max_M <= 1.0 &&
         r.coercivity_inf > 0.0;
  return r;
}

}  // namespace rotcouette

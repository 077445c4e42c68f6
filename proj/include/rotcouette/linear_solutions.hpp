#pragma once

// Per-mode solutions of the linearized perturbation system.
//
// Non-zero x-frequencies (k != 0) are tracked through the symmetrized pair
//   K1 = |k,l| w^{-1/2} Q1,  K2 = |k| w^{-1/2} Q2,  Q = -w U,
// which obeys
//   K1' - |k||k,l|/w K2 = -nu w K1,
//   K2' + |k||k,l|/w K1 = -nu w K2,
// i.e. a rotation by phase_angle() damped by exp(-nu int_0^t w).
// U3 is driven by (U1, U2) and is integrated with the exact viscous factor.
// Zero x-frequencies (k = 0) follow the lift-up semigroup.

#include <cmath>
#include <complex>
#include <stdexcept>

#include "quadrature.hpp"
#include "spectral_core.hpp"

namespace rotcouette {

struct ModeStateK {
  complex k1{};
  complex k2{};
  double norm_sq() const { return std::norm(k1) + std::norm(k2); }
};

/// Fourier coefficients of Delta_L U^1, Delta_L U^2 at one mode.
struct ModeStateQ {
  complex q1{};
  complex q2{};
};

/// x-averaged velocity coefficients at one (eta, l).
struct ZeroModeState {
  complex u1{};
  complex u2{};
  complex u3{};
};

namespace detail {
inline void require_nonzero_k(const WaveVector& kv, const char* who) {
  if (kv.k == 0)
    throw std::invalid_argument(std::string(who) +
                                ": k = 0 modes are handled by zero_mode_evolve");
}
}  // namespace detail

inline ModeStateK to_K(const ModeStateQ& q, double t, const WaveVector& kv) {
  detail::require_nonzero_k(kv, "to_K");
  const double rw = 1.0 / std::sqrt(w_symbol(t, kv));
  return {kv.horizontal() * rw * q.q1, std::abs(kv.k) * rw * q.q2};
}

inline ModeStateQ to_Q(const ModeStateK& s, double t, const WaveVector& kv) {
  detail::require_nonzero_k(kv, "to_Q");
  const double sw = std::sqrt(w_symbol(t, kv));
  return {sw / kv.horizontal() * s.k1, sw / std::abs(kv.k) * s.k2};
}

/// (K1, K2) of a velocity pair (U1, U2) at one k != 0 mode.
inline ModeStateK K_from_velocity(complex u1, complex u2, double t,
                                  const WaveVector& kv) {
  detail::require_nonzero_k(kv, "K_from_velocity");
  const double sw = std::sqrt(w_symbol(t, kv));
  return {-kv.horizontal() * sw * u1, -double(std::abs(kv.k)) * sw * u2};
}

struct VelocityPair {
  complex u1{};
  complex u2{};
};

inline VelocityPair velocity_from_K(const ModeStateK& s, double t,
                                    const WaveVector& kv) {
  detail::require_nonzero_k(kv, "velocity_from_K");
  const double sw = std::sqrt(w_symbol(t, kv));
  return {-s.k1 / (kv.horizontal() * sw), -s.k2 / (std::abs(kv.k) * sw)};
}

/// int_0^t |k||k,l| / w(s) ds in closed form; |result| < pi.
inline double phase_angle(double t, const WaveVector& kv) {
  detail::require_nonzero_k(kv, "phase_angle");
  const double a = kv.horizontal();
  const double sgn = kv.k > 0 ? 1.0 : -1.0;
  return sgn * (std::atan(kv.eta / a) - std::atan((kv.eta - kv.k * t) / a));
}

/// Inviscid rotation of (K1, K2) by angle phi.
inline ModeStateK rotate_K(const ModeStateK& s, double phi) {
  const double c = std::cos(phi), sn = std::sin(phi);
  return {c * s.k1 + sn * s.k2, -sn * s.k1 + c * s.k2};
}

/// Exact solution of the symmetrized system from time 0 to t.
inline ModeStateK evolve_K_closed(const ModeStateK& s0, double t, double nu,
                                  const WaveVector& kv) {
  detail::require_nonzero_k(kv, "evolve_K_closed");
  if (t < 0.0) throw std::invalid_argument("evolve_K_closed: t must be >= 0");
  if (nu < 0.0) throw std::invalid_argument("evolve_K_closed: nu must be >= 0");
  ModeStateK s = rotate_K(s0, phase_angle(t, kv));
  const double decay = std::exp(-nu * integral_w(t, kv));
  s.k1 *= decay;
  s.k2 *= decay;
  return s;
}

/// |K(t)|^2 <= exp(-(nu/6) k^2 t^3) |K(0)|^2 (+1e-12 slack).
inline bool enhanced_dissipation_check(const ModeStateK& s0, double t, double nu,
                                       const WaveVector& kv) {
  const ModeStateK s = evolve_K_closed(s0, t, nu, kv);
  const double k2 = double(kv.k) * kv.k;
  const double envelope = std::exp(-nu / 6.0 * k2 * t * t * t) * s0.norm_sq();
  return s.norm_sq() <= envelope * (1.0 + 1e-12) + 1e-12;
}

/// Right-hand side forcing of the U3 equation: l (k U2 + (eta - k t) U1) / w.
inline complex u3_forcing(const VelocityPair& u, double t, const WaveVector& kv) {
  const double xi = kv.eta - kv.k * t;
  return double(kv.l) * (double(kv.k) * u.u2 + xi * u.u1) / w_symbol(t, kv);
}

/// U3(t) along the closed-form K trajectory started from k0.
///
/// With the exact viscous factor pulled out,
///   U3(t) = exp(-nu int_0^t w) [U3(0) + int_0^t g(s) ds],
/// where g is the forcing generated by the inviscid (rotated) K. The remaining
/// integral is smooth and is evaluated by adaptive Simpson.
inline complex evolve_U3(complex u3_0, const ModeStateK& k0, double t, double nu,
                         const WaveVector& kv, double tol = 1e-10) {
  detail::require_nonzero_k(kv, "evolve_U3");
  if (t < 0.0) throw std::invalid_argument("evolve_U3: t must be >= 0");
  complex forced{};
  const double scale = std::sqrt(k0.norm_sq());
  if (kv.l != 0 && scale > 0.0 && t > 0.0) {
    auto g = [&](double s) {
      const ModeStateK ks = rotate_K(k0, phase_angle(s, kv));
      return u3_forcing(velocity_from_K(ks, s, kv), s, kv);
    };
    const int panels = 1 + int(std::min(4096.0, std::ceil(std::abs(kv.k) * t)));
    forced = adaptive_simpson(g, 0.0, t, tol * scale, panels);
  }
  return std::exp(-nu * integral_w(t, kv)) * (u3_0 + forced);
}

/// U3(t) for an arbitrary K trajectory path(s) -> ModeStateK:
///   U3(t) = exp(-nu int_0^t w) U3(0) + int_0^t exp(-nu int_s^t w) f(s) ds.
template <class KPath>
complex evolve_U3_along(complex u3_0, KPath&& path, double t, double nu,
                        const WaveVector& kv, double tol = 1e-10) {
  detail::require_nonzero_k(kv, "evolve_U3_along");
  if (t < 0.0) throw std::invalid_argument("evolve_U3_along: t must be >= 0");
  complex forced{};
  const double scale = std::sqrt(ModeStateK(path(0.0)).norm_sq());
  if (kv.l != 0 && scale > 0.0 && t > 0.0) {
    auto h = [&](double s) {
      const ModeStateK ks = path(s);
      return std::exp(-nu * integral_w_between(s, t, kv)) *
             u3_forcing(velocity_from_K(ks, s, kv), s, kv);
    };
    const int panels = 1 + int(std::min(4096.0, std::ceil(std::abs(kv.k) * t)));
    forced = adaptive_simpson(h, 0.0, t, tol * scale, panels);
  }
  return std::exp(-nu * integral_w(t, kv)) * u3_0 + forced;
}

/// Lift-up semigroup exp(M t) applied to s0 at (eta, l) != (0, 0).
inline ZeroModeState zero_mode_evolve(const ZeroModeState& s0, double t, double nu,
                                      double eta, int l) {
  if (eta == 0.0 && l == 0)
    throw std::domain_error(
        "zero_mode_evolve: (eta, l) = (0, 0) has no lift-up dynamics; "
        "use zero_zero_mode_evolve");
  if (t < 0.0) throw std::invalid_argument("zero_mode_evolve: t must be >= 0");
  const double r2 = eta * eta + double(l) * l;
  const double decay = std::exp(-nu * r2 * t);
  return {decay * s0.u1, decay * (s0.u2 - (double(l) * l / r2) * t * s0.u1),
          decay * (s0.u3 + (eta * l / r2) * t * s0.u1)};
}

/// (eta, l) = (0, 0): the Laplacian symbol vanishes, so the state is frozen
/// and u2 is forced to zero by incompressibility.
inline ZeroModeState zero_zero_mode_evolve(const ZeroModeState& s0) {
  return {s0.u1, complex{}, s0.u3};
}

struct DampingEnvelopes {
  double bound12 = 0.0;  ///< <t>^{-1} exp(-(nu/6) t^3) ||u_in||
  double bound3 = 0.0;   ///< exp(-(nu/6) t^3) ||u_in||
};

/// Theoretical linear envelopes for (U1, U2)_{!=} and U3_{!=}, k = 1 reference.
inline DampingEnvelopes inviscid_damping_rates(double u_in_norm, double t, double nu) {
  if (t < 0.0) throw std::invalid_argument("inviscid_damping_rates: t must be >= 0");
  const double e = std::exp(-nu / 6.0 * t * t * t) * u_in_norm;
  return {e / bracket(t), e};
}

/// w^{-1} / (<t>^{-2} |k, eta, l|^2); bounded by 2 for k != 0.
inline double damping_factor_ratio(double t, const WaveVector& kv) {
  const double m2 = kv.magnitude() * kv.magnitude();
  return (1.0 + t * t) / (w_symbol(t, kv) * m2);
}

}  // namespace rotcouette

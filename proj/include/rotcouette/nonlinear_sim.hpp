#pragma once

// Pseudospectral integration of the perturbation system in the moving frame:
//
//   dU/dt = nu Delta_L U + linear_rhs(U) - P_L (U . grad_L U),
//
// with an exact per-mode integrating factor exp(-nu int w) for the viscous
// term and explicit RK (midpoint or classical RK4) for the rest. Products are
// formed on the (X, Y, Z) grid with 2/3 dealiasing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "snapshot_io.hpp"
#include "velocity_field.hpp"

namespace rotcouette {

enum class IcKind { single_mode, random_band, file };
enum class Integrator { midpoint, rk4 };

struct SimConfig {
  double nu = 1e-2;
  double beta = 1.0;  ///< Coriolis coefficient; the shear rate is 1
  GridSpec grid{};
  double dt = 0.0;  ///< <= 0 picks min(0.01, 0.5 / (max|u| * max wavenumber))
  double t_end = 10.0;
  double eps = 1e-6;
  std::uint64_t seed = 1;
  IcKind ic_kind = IcKind::random_band;
  std::string ic_file;
  double sigma = 5.0;
  bool nonlinear_enabled = true;
  bool bootstrap_diagnostics = true;
  Integrator integrator = Integrator::rk4;

  int diag_cadence = 10;      ///< steps between reports
  int snapshot_cadence = 0;   ///< steps between kept snapshots; 0 = first and last only
  double blowup_cap = 1e8;    ///< on ||U||_{L2}

  // single_mode placement; eta is snapped to the nearest grid frequency
  int mode_k = 1;
  double mode_eta = 0.0;
  int mode_l = 1;

  double C0 = 100.0;
  double C1 = 10.0;
  double window_constant = 1000.0;
  /// Warn when this fraction of any component's energy sits at
  /// |eta| >= 0.9 of the dealiasing cutoff.
  double resolution_fraction = 1e-6;

  void validate() const {
    grid.validate();
    if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("SimConfig: nu must lie in (0, 1)");
    if (!(t_end >= 0.0)) throw std::invalid_argument("SimConfig: t_end must be >= 0");
    if (!(eps >= 0.0)) throw std::invalid_argument("SimConfig: eps must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("SimConfig: sigma must be >= 0");
    if (bootstrap_diagnostics && !(sigma > 4.5))
      throw std::invalid_argument("SimConfig: sigma must be > 9/2 for bootstrap diagnostics");
    if (diag_cadence < 1) throw std::invalid_argument("SimConfig: diag_cadence must be >= 1");
    if (snapshot_cadence < 0)
      throw std::invalid_argument("SimConfig: snapshot_cadence must be >= 0");
    if (!(blowup_cap > 0.0)) throw std::invalid_argument("SimConfig: blowup_cap must be > 0");
    if (!std::isfinite(dt)) throw std::invalid_argument("SimConfig: dt must be finite");
    if (ic_kind == IcKind::file && ic_file.empty())
      throw std::invalid_argument("SimConfig: ic_kind=file needs ic_file");
  }

  DiagnosticsConfig diagnostics() const { return {nu, sigma, C0, C1, window_constant}; }
};

/// Snaps eta to the grid and returns the y index.
inline int nearest_eta_index(const GridSpec& g, double eta) {
  return int(std::lround(eta * g.ly / (2.0 * pi)));
}

/// Initial data per cfg.ic_kind, projected divergence-free at its start time
/// and with zero mean.
inline VelocityField make_initial_condition(const SimConfig& cfg) {
  const GridSpec& g = cfg.grid;
  if (cfg.ic_kind == IcKind::file) {
    Snapshot s = read_snapshot(cfg.ic_file);
    if (!(s.field.grid() == g))
      throw std::invalid_argument("make_initial_condition: snapshot grid differs from config");
    const double t0 = s.field.time();
    VelocityField U = leray_project_L(s.field, t0);
    for (auto& c : U.u) {
      dealias(c);
      enforce_hermitian(c);
    }
    return U;
  }

  VelocityField U(g, 0.0);
  if (cfg.ic_kind == IcKind::single_mode) {
    const int jy = nearest_eta_index(g, cfg.mode_eta);
    if (cfg.mode_k == 0 && jy == 0 && cfg.mode_l == 0)
      throw std::invalid_argument("make_initial_condition: single mode cannot be (0, 0, 0)");
    if (!g.retained(cfg.mode_k, jy, cfg.mode_l))
      throw std::invalid_argument("make_initial_condition: single mode outside dealiased band");
    const WaveVector kv{cfg.mode_k, g.eta_of(jy), cfg.mode_l};
    const double q[3] = {double(kv.k), kv.eta, double(kv.l)};
    const double w = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
    auto project = [&](std::array<double, 3> a) {
      const double d = (a[0] * q[0] + a[1] * q[1] + a[2] * q[2]) / w;
      for (int c = 0; c < 3; ++c) a[c] -= d * q[c];
      return a;
    };
    std::array<double, 3> a = project({1.0, 1.0, 1.0});
    double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    if (na < 1e-8) {
      a = project({1.0, 0.0, 0.0});
      na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    }
    if (cfg.eps == 0.0) return U;
    for (int c = 0; c < 3; ++c) {
      const double v = cfg.eps * a[c] / na;
      U.u[c].at(kv.k, jy, kv.l) = v;
      U.u[c].at(-kv.k, -jy, -kv.l) = v;
    }
    return U;
  }

  // random_band: |k|, |l| <= 2, |eta| <= 2, unit amplitudes with random phases
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  const int jmax = int(std::floor(2.0 * g.ly / (2.0 * pi)));
  for (int k = -2; k <= 2; ++k)
    for (int jy = -jmax; jy <= jmax; ++jy)
      for (int l = -2; l <= 2; ++l) {
        if (!g.retained(k, jy, l)) continue;
        // visit each conjugate pair once, from its lexicographically larger member
        if (std::tuple(k, jy, l) <= std::tuple(-k, -jy, -l)) continue;
        const WaveVector kv{k, g.eta_of(jy), l};
        const double q[3] = {double(k), kv.eta, double(l)};
        const double w = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        complex a[3];
        for (auto& c : a) c = std::polar(1.0, phase(rng));
        const complex d = (q[0] * a[0] + q[1] * a[1] + q[2] * a[2]) / w;
        for (int c = 0; c < 3; ++c) {
          a[c] -= d * q[c];
          U.u[c].at(k, jy, l) = a[c];
          U.u[c].at(-k, -jy, -l) = std::conj(a[c]);
        }
      }
  const double norm = sobolev_norm(U, cfg.sigma);
  if (norm > 0.0) U *= cfg.eps / norm;
  return U;
}

using RunObserver = std::function<void(const VelocityField&, const EnergyReport&)>;

struct Trajectory {
  std::vector<EnergyReport> reports;
  std::vector<VelocityField> snapshots;
  std::vector<std::string> warnings;
  double dt = 0.0;
  std::size_t steps = 0;
  double max_divergence = 0.0;  ///< over every step
  double initial_HN = 0.0;      ///< ||U_!=(t0)||_{H^N}
  double initial_full_HN = 0.0; ///< ||U(t0)||_{H^N}
  bool failed = false;
  double failure_time = std::numeric_limits<double>::quiet_NaN();
  std::string failure_message;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_((cfg.validate(), cfg)), plan_(cfg.grid), buf_(cfg.grid.size()) {
    const GridSpec& g = cfg_.grid;
    const std::size_t n = g.size();
    kx_.resize(n);
    eta_.resize(n);
    lz_.resize(n);
    keep_.resize(n);
    SpectralField(g).for_each_mode([&](std::size_t i, int k, int jy, int l) {
      kx_[i] = k;
      eta_[i] = g.eta_of(jy);
      lz_[i] = l;
      keep_[i] = g.retained(k, jy, l);
    });
    for (auto& v : vel_) v.resize(n);
    for (auto& v : adv_) v.resize(n);
  }

  const SimConfig& config() const { return cfg_; }

  /// -P_L(U . grad_L U), dealiased. Throws SimulationError on non-finite values.
  VelocityField nonlinear_rhs(const VelocityField& U, double t) {
    const std::size_t n = U.size();
    for (int c = 0; c < 3; ++c) {
      std::copy(U.u[c].coeffs().begin(), U.u[c].coeffs().end(), vel_[c].begin());
      plan_.to_physical(vel_[c]);
      std::fill(adv_[c].begin(), adv_[c].end(), complex{});
    }
    double umax = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      umax = std::max(umax, std::abs(vel_[0][p].real()) + std::abs(vel_[1][p].real()) +
                                std::abs(vel_[2][p].real()));
    last_umax_ = umax;

    for (int d = 0; d < 3; ++d) {
      for (int c = 0; c < 3; ++c) {
        const auto& uc = U.u[c].coeffs();
        for (std::size_t i = 0; i < n; ++i)
          buf_[i] = complex(0.0, symbol(i, d, t)) * uc[i];
        plan_.to_physical(buf_);
        for (std::size_t p = 0; p < n; ++p) adv_[c][p] += vel_[d][p].real() * buf_[p].real();
      }
    }

    VelocityField a(U.grid(), t);
    for (int c = 0; c < 3; ++c) {
      plan_.to_spectral(adv_[c]);
      auto out = a.u[c].coeffs();
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(adv_[c][i].real()) || !std::isfinite(adv_[c][i].imag()))
          throw SimulationError("non-finite nonlinear term", t);
        out[i] = keep_[i] ? -adv_[c][i] : complex{};
      }
    }
    return leray_project_L(a, t);
  }

  /// Everything except viscosity.
  VelocityField rhs(const VelocityField& U, double t) {
    VelocityField r = linear_rhs(U, t, cfg_.beta);
    if (cfg_.nonlinear_enabled) r += nonlinear_rhs(U, t);
    return r;
  }

  /// One integrating-factor RK step from t to t + dt.
  VelocityField step(const VelocityField& U, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("Simulator::step: dt must be > 0");
    const std::size_t n = U.size();
    const double th = t + 0.5 * dt;
    const double t1 = t + dt;
    std::vector<double> e1(n), e2(n);  // t -> th, th -> t1
    for (std::size_t i = 0; i < n; ++i) {
      const WaveVector kv{kx_[i], eta_[i], lz_[i]};
      e1[i] = std::exp(-cfg_.nu * integral_w_between(t, th, kv));
      e2[i] = std::exp(-cfg_.nu * integral_w_between(th, t1, kv));
    }
    auto combine = [&](auto&& fn, double time) {
      VelocityField out(U.grid(), time);
      for (int c = 0; c < 3; ++c) {
        auto o = out.u[c].coeffs();
        for (std::size_t i = 0; i < n; ++i) o[i] = fn(c, i);
      }
      return out;
    };
    auto u = [&](int c, std::size_t i) { return U.u[c][i]; };

    VelocityField next;
    const VelocityField k1 = rhs(U, t);
    if (cfg_.integrator == Integrator::midpoint) {
      const VelocityField ua = combine(
          [&](int c, std::size_t i) { return e1[i] * (u(c, i) + 0.5 * dt * k1.u[c][i]); }, th);
      const VelocityField k2 = rhs(ua, th);
      next = combine(
          [&](int c, std::size_t i) {
            return e1[i] * e2[i] * u(c, i) + dt * e2[i] * k2.u[c][i];
          },
          t1);
    } else {
      const VelocityField ua = combine(
          [&](int c, std::size_t i) { return e1[i] * (u(c, i) + 0.5 * dt * k1.u[c][i]); }, th);
      const VelocityField k2 = rhs(ua, th);
      const VelocityField ub = combine(
          [&](int c, std::size_t i) { return e1[i] * u(c, i) + 0.5 * dt * k2.u[c][i]; }, th);
      const VelocityField k3 = rhs(ub, th);
      const VelocityField uc = combine(
          [&](int c, std::size_t i) {
            return e1[i] * e2[i] * u(c, i) + dt * e2[i] * k3.u[c][i];
          },
          t1);
      const VelocityField k4 = rhs(uc, t1);
      next = combine(
          [&](int c, std::size_t i) {
            const double ef = e1[i] * e2[i];
            return ef * u(c, i) + dt / 6.0 *
                                      (ef * k1.u[c][i] +
                                       2.0 * e2[i] * (k2.u[c][i] + k3.u[c][i]) + k4.u[c][i]);
          },
          t1);
    }

    next = leray_project_L(next, t1);
    for (auto& c : next.u) dealias(c);
    const double l2 = sobolev_norm(next, 0.0);
    if (!std::isfinite(l2)) throw SimulationError("non-finite velocity", t1);
    if (l2 > cfg_.blowup_cap) throw SimulationError("velocity norm exceeded blow-up cap", t1);
    return next;
  }

  /// Largest |k| + |eta - kt| + |l| over retained modes.
  double max_wavenumber(double t) const {
    const GridSpec& g = cfg_.grid;
    const double kmax = GridSpec::dealias_max(g.nx);
    return kmax + g.eta_cutoff() + kmax * std::abs(t) + GridSpec::dealias_max(g.nz);
  }

  /// max over grid points of |u1| + |u2| + |u3|.
  double max_velocity(const VelocityField& U) {
    double umax = 0.0;
    for (int c = 0; c < 3; ++c) {
      std::copy(U.u[c].coeffs().begin(), U.u[c].coeffs().end(), vel_[c].begin());
      plan_.to_physical(vel_[c]);
    }
    for (std::size_t p = 0; p < U.size(); ++p)
      umax = std::max(umax, std::abs(vel_[0][p].real()) + std::abs(vel_[1][p].real()) +
                                std::abs(vel_[2][p].real()));
    return umax;
  }

  /// Advective Courant number of the most recent nonlinear evaluation.
  double cfl(double dt, double t) const { return dt * last_umax_ * max_wavenumber(t); }

  double automatic_dt(const VelocityField& U0) {
    const double umax = max_velocity(U0);
    if (umax == 0.0) return 0.01;
    return std::min(0.01, 0.5 / (umax * max_wavenumber(U0.time())));
  }

 private:
  double symbol(std::size_t i, int d, double t) const {
    switch (d) {
      case 0: return kx_[i];
      case 1: return eta_[i] - kx_[i] * t;
      default: return lz_[i];
    }
  }

  SimConfig cfg_;
  FftPlan3d plan_;
  std::vector<int> kx_, lz_;
  std::vector<double> eta_;
  std::vector<char> keep_;
  std::array<std::vector<complex>, 3> vel_, adv_;
  std::vector<complex> buf_;
  double last_umax_ = 0.0;
};

/// Convenience wrapper that plans transforms on every call.
inline VelocityField step(const VelocityField& U, double t, double dt, const SimConfig& cfg) {
  Simulator sim(cfg);
  return sim.step(U, t, dt);
}

namespace detail {

inline void run_into(const SimConfig& cfg, Trajectory& traj, const RunObserver& observer) {
  Simulator sim(cfg);
  const DiagnosticsConfig dcfg = cfg.diagnostics();
  BootstrapAccumulators acc;

  VelocityField U = make_initial_condition(cfg);
  const double t0 = U.time();
  traj.dt = cfg.dt > 0.0 ? cfg.dt : sim.automatic_dt(U);
  traj.initial_HN = sobolev_norm(project_nonzero(U), dcfg.N());
  traj.initial_full_HN = sobolev_norm(U, dcfg.N());
  const std::size_t nsteps =
      cfg.t_end > t0 ? std::size_t(std::ceil((cfg.t_end - t0) / traj.dt - 1e-9)) : 0;

  bool warned_cfl = false, warned_resolution = false;
  auto report = [&](const VelocityField& V, double t) {
    EnergyReport r = cfg.bootstrap_diagnostics ? bootstrap_report(V, t, dcfg, acc)
                                               : instantaneous_report(V, t, dcfg);
    if (!warned_resolution) {
      for (int c = 0; c < 3; ++c) {
        if (high_eta_energy_fraction(V.u[c]) > cfg.resolution_fraction) {
          traj.warnings.push_back(
              "resolution: energy near the eta dealiasing cutoff at t=" + std::to_string(t));
          warned_resolution = true;
          break;
        }
      }
    }
    if (observer) observer(V, r);
    traj.reports.push_back(std::move(r));
  };

  traj.max_divergence = max_divergence(U, t0);
  report(U, t0);
  traj.snapshots.push_back(U);

  for (std::size_t s = 1; s <= nsteps; ++s) {
    const double t = t0 + double(s - 1) * traj.dt;
    const double t1 = s == nsteps ? cfg.t_end : t0 + double(s) * traj.dt;
    U = sim.step(U, t, t1 - t);
    traj.steps = s;
    traj.max_divergence = std::max(traj.max_divergence, max_divergence(U, t1));
    if (cfg.nonlinear_enabled && !warned_cfl && sim.cfl(traj.dt, t1) > 1.0) {
      traj.warnings.push_back("cfl: advective Courant number above 1 at t=" +
                              std::to_string(t1));
      warned_cfl = true;
    }
    if (s % std::size_t(cfg.diag_cadence) == 0 || s == nsteps) report(U, t1);
    if ((cfg.snapshot_cadence > 0 && s % std::size_t(cfg.snapshot_cadence) == 0) ||
        s == nsteps)
      traj.snapshots.push_back(U);
  }
}

}  // namespace detail

/// Integrates cfg from its initial condition to t_end. Step failures are
/// rethrown as SimulationError carrying the failing time.
inline Trajectory run(const SimConfig& cfg, const RunObserver& observer = {}) {
  Trajectory traj;
  detail::run_into(cfg, traj, observer);
  return traj;
}

/// As run(), but a SimulationError ends the run and is recorded in the
/// returned (partial) trajectory.
inline Trajectory run_capturing(const SimConfig& cfg, const RunObserver& observer = {}) {
  Trajectory traj;
  try {
    detail::run_into(cfg, traj, observer);
  } catch (const SimulationError& e) {
    traj.failed = true;
    traj.failure_time = e.time();
    traj.failure_message = e.what();
  }
  return traj;
}

}  // namespace rotcouette

#pragma once

// Subcommands behind the rotcouette executable. Kept in a header so the test
// suite can drive them in-process through run_cli().
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "linear_solutions.hpp"
#include "multipliers.hpp"
#include "nonlinear_sim.hpp"
#include "snapshot_io.hpp"
#include "threshold_harness.hpp"
#include "version.hpp"

namespace rotcouette {

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version = ROTCOUETTE_VERSION;
  std::string start_time;
  std::string end_time;
  std::vector<std::string> outputs;  ///< paths relative to the output directory
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["version"] = m.version;
  j["start_time"] = m.start_time;
  j["end_time"] = m.end_time;
  j["outputs"] = m.outputs;
  std::ofstream os(path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

inline std::string energy_csv_header() {
  std::string h = "t";
  for (auto c : kEnergyColumns) h += fmt::format(",{}", c);
  return h + ",flags\n";
}

inline std::string energy_csv_row(const EnergyReport& r) {
  std::string row = fmt::format("{:.17g}", r.t);
  for (double v : r.values) row += fmt::format(",{:.17g}", v);
  std::string flags;
  for (std::size_t i = 0; i < r.flags.size(); ++i) flags += (i ? ";" : "") + r.flags[i];
  return row + "," + flags + "\n";
}

namespace detail {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return os;
}

struct ModeList {
  std::vector<int> k;
  std::vector<double> eta;
  std::vector<int> l;

  std::vector<WaveVector> modes() const {
    if (k.size() != eta.size() || k.size() != l.size())
      throw UsageError("--k, --eta and --l need the same number of values");
    std::vector<WaveVector> out;
    for (std::size_t i = 0; i < k.size(); ++i) out.push_back({k[i], eta[i], l[i]});
    return out;
  }
};

inline void add_mode_options(CLI::App* cmd, ModeList& ml) {
  cmd->add_option("--k", ml.k, "x-frequencies (one per mode)")->required();
  cmd->add_option("--eta", ml.eta, "y-frequencies (one per mode)")->required();
  cmd->add_option("--l", ml.l, "z-frequencies (one per mode)")->required();
}

inline std::vector<double> time_grid(double t_max, double dt) {
  if (!(t_max >= 0.0)) throw UsageError("--t-max must be >= 0");
  if (!(dt > 0.0)) throw UsageError("--dt must be > 0");
  std::vector<double> ts;
  const auto n = std::size_t(std::floor(t_max / dt + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) ts.push_back(double(i) * dt);
  return ts;
}

inline std::string fmt_opt(std::optional<double> v) {
  return v ? fmt::format("{:.17g}", *v) : std::string();
}

// -------------------------------------------------------------------- linear

struct LinearArgs {
  ModeList modes;
  double nu = -1.0;
  double t_max = 20.0;
  double dt = 0.1;
  std::vector<double> u0;  ///< empty selects a coordinate axis
  std::string out = "out";
};

/// Divergence-free initial velocity for one mode: the requested vector
/// projected, or the first coordinate axis with a non-trivial projection.
inline std::array<complex, 3> linear_initial_velocity(const WaveVector& kv,
                                                      const std::vector<double>& u0) {
  const double q[3] = {double(kv.k), kv.eta, double(kv.l)};
  const double w = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
  auto project = [&](std::array<double, 3> a) {
    if (w > 0.0) {
      const double d = (a[0] * q[0] + a[1] * q[1] + a[2] * q[2]) / w;
      for (int c = 0; c < 3; ++c) a[c] -= d * q[c];
    }
    return a;
  };
  std::array<double, 3> a{};
  if (!u0.empty()) {
    if (u0.size() != 3) throw UsageError("--u0 needs three values");
    a = project({u0[0], u0[1], u0[2]});
  } else {
    for (int axis = 0; axis < 3; ++axis) {
      std::array<double, 3> e{};
      e[axis] = 1.0;
      a = project(e);
      if (std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]) > 1e-12) break;
    }
  }
  return {a[0], a[1], a[2]};
}

inline int cmd_linear(const LinearArgs& a, std::ostream& log) {
  if (!(a.nu >= 0.0 && a.nu < 1.0)) throw UsageError("--nu must lie in [0, 1)");
  const auto modes = a.modes.modes();
  const auto ts = time_grid(a.t_max, a.dt);
  const std::string start = utc_timestamp();
  std::filesystem::create_directories(a.out);
  const std::filesystem::path csv = std::filesystem::path(a.out) / "linear.csv";
  auto os = open_output(csv);
  os << "t,k,eta,l,nu,K1_abs,K2_abs,K_abs,K_envelope,U3_abs,U3_envelope,"
        "u1_re,u1_im,u2_re,u2_im,u3_re,u3_im,liftup_u2,liftup_u3\n";
  std::string key = fmt::format("linear nu={:.17g} t_max={:.17g} dt={:.17g}", a.nu, a.t_max, a.dt);
  for (const auto& kv : modes) {
    key += fmt::format(" ({},{:.17g},{})", kv.k, kv.eta, kv.l);
    const auto u = linear_initial_velocity(kv, a.u0);
    for (double t : ts) {
      std::optional<double> K1, K2, K, Kenv, U3abs, U3env, lift2, lift3;
      complex v1, v2, v3;
      if (kv.k != 0) {
        const ModeStateK k0 = K_from_velocity(u[0], u[1], 0.0, kv);
        const ModeStateK kt = evolve_K_closed(k0, t, a.nu, kv);
        const VelocityPair vp = velocity_from_K(kt, t, kv);
        v1 = vp.u1;
        v2 = vp.u2;
        v3 = evolve_U3(u[2], k0, t, a.nu, kv);
        const double k2 = double(kv.k) * kv.k;
        const double nk0 = std::sqrt(k0.norm_sq());
        K1 = std::abs(kt.k1);
        K2 = std::abs(kt.k2);
        K = std::sqrt(kt.norm_sq());
        Kenv = std::exp(-a.nu / 12.0 * k2 * t * t * t) * nk0;
        U3abs = std::abs(v3);
        U3env = std::exp(-a.nu / 12.0 * k2 * t * t * t) *
                (std::abs(u[2]) + 12.0 / std::abs(kv.k) * nk0);
      } else if (kv.eta == 0.0 && kv.l == 0) {
        const ZeroModeState s = zero_zero_mode_evolve({u[0], u[1], u[2]});
        v1 = s.u1;
        v2 = s.u2;
        v3 = s.u3;
        lift2 = s.u2.real();
        lift3 = s.u3.real();
      } else {
        const ZeroModeState s = zero_mode_evolve({u[0], u[1], u[2]}, t, a.nu, kv.eta, kv.l);
        v1 = s.u1;
        v2 = s.u2;
        v3 = s.u3;
        const double r2 = kv.eta * kv.eta + double(kv.l) * kv.l;
        lift2 = (u[1] - t * u[0] * (double(kv.l) * kv.l / r2)).real();
        lift3 = (u[2] + t * u[0] * (kv.eta * kv.l / r2)).real();
      }
      os << fmt::format(
          "{:.17g},{},{:.17g},{},{:.17g},{},{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},"
          "{:.17g},{:.17g},{},{}\n",
          t, kv.k, kv.eta, kv.l, a.nu, fmt_opt(K1), fmt_opt(K2), fmt_opt(K), fmt_opt(Kenv),
          fmt_opt(U3abs), fmt_opt(U3env), v1.real(), v1.imag(), v2.real(), v2.imag(),
          v3.real(), v3.imag(), fmt_opt(lift2), fmt_opt(lift3));
    }
  }
  os.close();
  write_manifest(std::filesystem::path(a.out) / "linear_manifest.json",
                 {"linear", fmt::format("{:016x}", fnv1a(key)), ROTCOUETTE_VERSION, start,
                  utc_timestamp(), {"linear.csv"}});
  log << "wrote " << csv.string() << '\n';
  return 0;
}

// --------------------------------------------------------------- multipliers

struct MultiplierArgs {
  ModeList modes;
  double nu = -1.0;
  double t_max = 20.0;
  double dt = 0.1;
  double window_constant = 1000.0;
  std::string out = "out";
};

inline int cmd_multipliers(const MultiplierArgs& a, std::ostream& log) {
  const MultiplierParams p{a.nu, a.window_constant};
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto modes = a.modes.modes();
  const auto ts = time_grid(a.t_max, a.dt);
  const std::string start = utc_timestamp();
  std::filesystem::create_directories(a.out);
  const std::filesystem::path csv = std::filesystem::path(a.out) / "multipliers.csv";
  auto os = open_output(csv);
  os << "t,k,eta,l,nu,m,M,mdot_over_m,Mdot_over_M,m_ode_residual\n";
  std::string key = fmt::format("multipliers nu={:.17g} t_max={:.17g} dt={:.17g} c={:.17g}",
                                a.nu, a.t_max, a.dt, a.window_constant);
  for (const auto& kv : modes) {
    key += fmt::format(" ({},{:.17g},{})", kv.k, kv.eta, kv.l);
    for (double t : ts) {
      std::optional<double> residual;
      try {
        residual = m_ode_residual(t, kv, p);
      } catch (const std::domain_error&) {
      }
      os << fmt::format("{:.17g},{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", t,
                        kv.k, kv.eta, kv.l, a.nu, m_exact(t, kv, p), M_closed(t, kv, p),
                        m_log_derivative(t, kv, p), M_log_derivative(t, kv, p),
                        fmt_opt(residual));
    }
  }
  os.close();
  write_manifest(std::filesystem::path(a.out) / "multipliers_manifest.json",
                 {"multipliers", fmt::format("{:016x}", fnv1a(key)), ROTCOUETTE_VERSION, start,
                  utc_timestamp(), {"multipliers.csv"}});
  log << "wrote " << csv.string() << '\n';
  return 0;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> nu, eps, t_end, dt;
  std::optional<std::string> ic;
  bool linear = false;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& log) {
  ExperimentConfig ec = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  SimConfig& c = ec.sim;
  if (a.seed) c.seed = *a.seed;
  if (a.nu) c.nu = *a.nu;
  if (a.eps) c.eps = *a.eps;
  if (a.t_end) c.t_end = *a.t_end;
  if (a.dt) c.dt = *a.dt;
  if (a.ic) c.ic_kind = ic_kind_from_string(*a.ic);
  if (a.linear) c.nonlinear_enabled = false;
  c.validate();

  const std::string start = utc_timestamp();
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir / "snapshots");
  const std::string cfg_text = format_config(ec);
  {
    auto os = open_output(dir / "config.ini");
    os << cfg_text;
  }
  RunManifest m{"simulate", fmt::format("{:016x}", fnv1a(cfg_text)), ROTCOUETTE_VERSION, start,
                "", {"config.ini", "energy.csv"}};

  auto energy = open_output(dir / "energy.csv");
  energy << energy_csv_header();
  const Trajectory traj = run_capturing(c, [&](const VelocityField&, const EnergyReport& r) {
    energy << energy_csv_row(r);
  });
  energy.close();

  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const std::string name = fmt::format("snapshots/snapshot_{:04d}.csv", i);
    write_snapshot((dir / name).string(), traj.snapshots[i], c.nu);
    m.outputs.push_back(name);
  }
  m.end_time = utc_timestamp();
  write_manifest(dir / "simulate_manifest.json", m);
  for (const auto& w : traj.warnings) log << "warning: " << w << '\n';
  log << fmt::format("simulate: {} steps, dt={:.6g}, {} reports\n", traj.steps, traj.dt,
                     traj.reports.size());
  if (traj.failed) {
    log << fmt::format("simulate: {} at t={:.6g}\n", traj.failure_message, traj.failure_time);
    return 2;
  }
  return 0;
}

// --------------------------------------------------------------------- sweep

struct SweepArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string fit_summary;
};

inline int cmd_sweep(const SweepArgs& a, std::ostream& log) {
  ExperimentConfig ec = load_config(a.config);
  SweepConfig& s = ec.sweep;
  s.base = ec.sim;
  if (a.seed) s.base.seed = ec.sim.seed = *a.seed;
  if (a.threads) s.threads = *a.threads;
  s.validate();
  s.base.validate();

  const std::string start = utc_timestamp();
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  s.checkpoint_dir = (dir / "cells").string();
  const std::string cfg_text = format_config(ec);
  {
    auto os = open_output(dir / "config.ini");
    os << cfg_text;
  }
  const ThresholdResult res = sweep(s);

  {
    auto os = open_output(dir / "sweep_cells.csv");
    os << "nu,eps,stable,peak_norm,t_peak,verdict,raw_verdict,initial_norm,final_norm,"
          "blew_up,from_bisection,error\n";
    for (const auto& c : res.cells)
      os << fmt::format("{:.17g},{:.17g},{},{:.17g},{:.17g},{},{},{:.17g},{:.17g},{},{},\"{}\"\n",
                        c.nu, c.eps, c.verdict == Stability::stable ? 1 : 0,
                        c.detail.peak_norm, c.detail.t_peak, to_string(c.verdict),
                        to_string(c.raw), c.detail.initial_norm, c.detail.final_norm,
                        c.detail.blew_up ? 1 : 0, c.from_bisection ? 1 : 0, c.error);
  }
  {
    auto os = open_output(dir / "sweep_summary.csv");
    os << "nu,eps_star,censored\n";
    for (const auto& n : res.per_nu)
      os << fmt::format("{:.17g},{:.17g},{}\n", n.nu, n.eps_star, n.censored);
  }
  const std::filesystem::path fit_path =
      a.fit_summary.empty() ? dir / "gamma_fit.json" : std::filesystem::path(a.fit_summary);
  {
    nlohmann::json j;
    j["available"] = res.fit.available;
    j["n"] = res.fit.n;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
    j["gamma"] = num(res.fit.gamma);
    j["intercept"] = num(res.fit.intercept);
    j["ci95_low"] = num(res.fit.ci_low);
    j["ci95_high"] = num(res.fit.ci_high);
    j["residual_rms"] = num(res.fit.residual_rms);
    j["notes"] = res.notes;
    auto os = open_output(fit_path);
    os << j.dump(2) << '\n';
  }

  RunManifest m{"sweep", fmt::format("{:016x}", fnv1a(cfg_text)), ROTCOUETTE_VERSION, start, "",
                {"config.ini", "sweep_cells.csv", "sweep_summary.csv"}};
  const auto rel = std::filesystem::relative(fit_path, dir);
  m.outputs.push_back(rel.empty() ? fit_path.string() : rel.string());
  for (const auto& c : res.cells)
    m.outputs.push_back(
        std::filesystem::relative(detail::cell_checkpoint_path(s.checkpoint_dir, c.nu, c.eps), dir)
            .string());
  m.end_time = utc_timestamp();
  write_manifest(dir / "sweep_manifest.json", m);
  for (const auto& n : res.notes) log << "note: " << n << '\n';
  log << fmt::format("sweep: {} cells, gamma={:.4g}\n", res.cells.size(), res.fit.gamma);
  return 0;
}

}  // namespace detail

/// Parses argv and runs one subcommand.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Rotating Couette flow perturbation toolkit", "rotcouette"};
  app.set_version_flag("--version", ROTCOUETTE_VERSION);
  app.require_subcommand(1);

  std::string config, outdir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "INI configuration file");
    cmd->add_option("--out", outdir, "output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "random seed override");
    cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };

  detail::LinearArgs la;
  auto* lin = app.add_subcommand("linear", "closed-form linear mode trajectories");
  common(lin);
  detail::add_mode_options(lin, la.modes);
  lin->add_option("--nu", la.nu, "viscosity in [0, 1)")->required();
  lin->add_option("--t-max", la.t_max, "final time")->capture_default_str();
  lin->add_option("--dt", la.dt, "output spacing")->capture_default_str();
  lin->add_option("--u0", la.u0, "initial velocity (3 values), projected divergence-free")
      ->expected(3);

  detail::MultiplierArgs ma;
  auto* mul = app.add_subcommand("multipliers", "m and M multiplier profiles");
  common(mul);
  detail::add_mode_options(mul, ma.modes);
  mul->add_option("--nu", ma.nu, "viscosity in (0, 1)")->required();
  mul->add_option("--t-max", ma.t_max, "final time")->capture_default_str();
  mul->add_option("--dt", ma.dt, "output spacing")->capture_default_str();
  mul->add_option("--window-constant", ma.window_constant, "m window constant")
      ->capture_default_str();

  detail::SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "pseudospectral run from a configuration");
  common(sim);
  sim->add_option("--nu", sa.nu, "viscosity override");
  sim->add_option("--eps", sa.eps, "initial H^sigma amplitude override");
  sim->add_option("--t-end", sa.t_end, "final time override");
  sim->add_option("--dt", sa.dt, "time step override");
  sim->add_option("--ic", sa.ic, "single_mode | random_band | file");
  sim->add_flag("--linear", sa.linear, "disable the nonlinear term");

  detail::SweepArgs wa;
  auto* swp = app.add_subcommand("sweep", "epsilon-nu stability sweep");
  common(swp);
  swp->add_option("--fit-summary", wa.fit_summary, "path of the gamma fit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (lin->parsed()) {
      la.out = outdir;
      return detail::cmd_linear(la, out);
    }
    if (mul->parsed()) {
      ma.out = outdir;
      return detail::cmd_multipliers(ma, out);
    }
    if (sim->parsed()) {
      sa.config = config;
      sa.out = outdir;
      sa.seed = seed;
      return detail::cmd_simulate(sa, out);
    }
    wa.config = config;
    wa.out = outdir;
    wa.seed = seed;
    wa.threads = threads;
    if (wa.config.empty()) throw detail::UsageError("sweep needs --config");
    return detail::cmd_sweep(wa, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"rotcouette"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data(), out, err);
}

}  // namespace rotcouette

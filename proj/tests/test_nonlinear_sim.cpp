#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rotcouette/linear_solutions.hpp"
#include "rotcouette/nonlinear_sim.hpp"
#include "rotcouette/snapshot_io.hpp"
#include "test_support.hpp"

using namespace rotcouette;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.grid = testing::small_grid();
  c.nu = 1e-2;
  c.dt = 0.01;
  c.t_end = 1.0;
  c.eps = 1e-3;
  c.sigma = 5.0;
  return c;
}

double field_distance(const VelocityField& a, const VelocityField& b) {
  double worst = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < a.size(); ++n)
      worst = std::max(worst, std::abs(a.u[c][n] - b.u[c][n]));
  return worst;
}

double field_max(const VelocityField& a) {
  double m = 0.0;
  for (const auto& c : a.u) m = std::max(m, max_abs(c));
  return m;
}

complex energy_pairing(const VelocityField& a, const VelocityField& b) {
  complex s{};
  for (int c = 0; c < 3; ++c) s += inner_product(a.u[c], b.u[c]);
  return s;
}

// Places (u1, u2, u3) at (k, jy, l) and the conjugate at the mirrored mode.
VelocityField single_mode_field(const GridSpec& g, int k, int jy, int l,
                                std::array<complex, 3> u) {
  VelocityField U(g, 0.0);
  for (int c = 0; c < 3; ++c) {
    U.u[c].at(k, jy, l) = u[c];
    U.u[c].at(-k, -jy, -l) = std::conj(u[c]);
  }
  return U;
}

}  // namespace

TEST_CASE("Leray projection in the moving frame", "[nonlinear_sim]") {
  const GridSpec g = testing::small_grid();
  VelocityField V(g, 1.3);
  for (int c = 0; c < 3; ++c) V.u[c] = testing::random_field(g, 40 + c);
  const double t = 1.3;
  const VelocityField P = leray_project_L(V, t);
  CHECK(max_divergence(P, t) < 1e-13);
  CHECK(field_distance(leray_project_L(P, t), P) < 1e-14);
  // the projection is orthogonal: <P, V - P> = 0
  VelocityField R = V;
  for (int c = 0; c < 3; ++c) R.u[c] -= P.u[c];
  CHECK(std::abs(energy_pairing(P, R)) < 1e-10 * sobolev_norm(V, 0.0) * sobolev_norm(V, 0.0));
  // gradients are annihilated
  VelocityField G(g, t);
  const SpectralField phi = testing::random_field(g, 50);
  G.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const double q[3] = {double(kv.k), kv.eta - kv.k * t, double(kv.l)};
    for (int c = 0; c < 3; ++c) G.u[c][n] = complex(0.0, q[c]) * phi[n];
  });
  CHECK(field_max(leray_project_L(G, t)) < 1e-13 * (1.0 + field_max(G)));
}

TEST_CASE("linear_rhs on x-independent modes matches the lift-up matrix", "[nonlinear_sim]") {
  const GridSpec g = testing::small_grid();
  const int jy = 2, l = 1;
  const double eta = g.eta_of(jy);
  const double r2 = eta * eta + l * l;
  const std::array<complex, 3> u{complex(0.3, 0.1), complex(-0.2, 0.4), complex(0.0, 0.0)};
  const VelocityField U = single_mode_field(g, 0, jy, l, u);
  const VelocityField R = linear_rhs(U, 0.7);
  const std::size_t n = g.flat(0, GridSpec::index_of(jy, g.ny), GridSpec::index_of(l, g.nz));
  CHECK(std::abs(R.u[0][n]) < 1e-15);
  CHECK(std::abs(R.u[1][n] - (-double(l * l) / r2) * u[0]) < 1e-15);
  CHECK(std::abs(R.u[2][n] - (eta * l / r2) * u[0]) < 1e-15);
}

TEST_CASE("linear_rhs preserves the moving-frame divergence", "[nonlinear_sim]") {
  const GridSpec g = testing::small_grid();
  const double t = 2.1;
  const VelocityField U = testing::random_velocity(g, 3, t);
  for (double beta : {1.0, 0.0, 1.7}) {
    const VelocityField R = linear_rhs(U, t, beta);
    // d/dt (q(t) . U) = q . U' - k U2
    double worst = 0.0;
    U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
      const complex d = double(kv.k) * R.u[0][n] + (kv.eta - kv.k * t) * R.u[1][n] +
                        double(kv.l) * R.u[2][n] - double(kv.k) * U.u[1][n];
      worst = std::max(worst, std::abs(d));
    });
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("nonlinear term is conservative, divergence-free and banded", "[nonlinear_sim]") {
  const GridSpec g = testing::small_grid();
  SimConfig cfg = small_config();
  Simulator sim(cfg);
  for (double t : {0.0, 0.8, 3.0}) {
    const VelocityField U = testing::random_velocity(g, 11, t, 2);
    const VelocityField N = sim.nonlinear_rhs(U, t);
    CHECK(max_divergence(N, t) < 1e-12);
    const double scale = sobolev_norm(U, 0.0) * sobolev_norm(N, 0.0);
    CHECK(std::abs(energy_pairing(U, N).real()) <= 1e-8 * scale);
    for (const auto& c : N.u) {
      CHECK(hermitian_defect(c) < 1e-12);
      c.for_each_mode([&](std::size_t n, int k, int jy, int l) {
        if (!g.retained(k, jy, l)) CHECK(c[n] == complex{});
      });
    }
  }
  const VelocityField Z(g, 0.0);
  CHECK(field_max(sim.nonlinear_rhs(Z, 0.0)) == 0.0);
}

TEST_CASE("a single Fourier mode has no nonlinear forcing", "[nonlinear_sim]") {
  const GridSpec g = testing::small_grid();
  Simulator sim(small_config());
  VelocityField U = single_mode_field(g, 1, 1, 1, {complex(1.0), complex(0.0), complex(-1.0)});
  U = leray_project_L(U, 0.0);
  CHECK(field_max(sim.nonlinear_rhs(U, 0.0)) < 1e-12);
}

TEST_CASE("linear step reproduces the closed-form solution", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.nonlinear_enabled = false;
  const GridSpec& g = cfg.grid;
  const int k = 1, jy = 1, l = 1;
  const WaveVector kv{k, g.eta_of(jy), l};
  VelocityField U = single_mode_field(g, k, jy, l, {complex(1.0, 0.2), complex(0.5), complex(-0.3, 0.1)});
  U = leray_project_L(U, 0.0);
  const std::size_t n = g.flat(GridSpec::index_of(k, g.nx), GridSpec::index_of(jy, g.ny),
                               GridSpec::index_of(l, g.nz));
  const complex u1 = U.u[0][n], u2 = U.u[1][n], u3 = U.u[2][n];

  Simulator sim(cfg);
  double t = 0.0;
  const double T = 5.0;
  while (t < T - 1e-12) {
    U = sim.step(U, t, cfg.dt);
    t += cfg.dt;
  }
  const ModeStateK k0 = K_from_velocity(u1, u2, 0.0, kv);
  const VelocityPair vp = velocity_from_K(evolve_K_closed(k0, T, cfg.nu, kv), T, kv);
  const complex w3 = evolve_U3(u3, k0, T, cfg.nu, kv, 1e-12);
  const double scale = std::abs(vp.u1) + std::abs(vp.u2) + std::abs(w3);
  CHECK(std::abs(U.u[0][n] - vp.u1) <= 1e-5 * scale);
  CHECK(std::abs(U.u[1][n] - vp.u2) <= 1e-5 * scale);
  CHECK(std::abs(U.u[2][n] - w3) <= 1e-5 * scale);
  CHECK(max_divergence(U, T) < 1e-12);
}

TEST_CASE("linear step on an x-independent mode matches zero_mode_evolve", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.nonlinear_enabled = false;
  const GridSpec& g = cfg.grid;
  const int jy = 1, l = 2;
  const double eta = g.eta_of(jy);
  VelocityField U = single_mode_field(g, 0, jy, l, {complex(0.4, -0.1), complex(0.0), complex(0.0)});
  U = leray_project_L(U, 0.0);
  const std::size_t n = g.flat(0, GridSpec::index_of(jy, g.ny), GridSpec::index_of(l, g.nz));
  const ZeroModeState s0{U.u[0][n], U.u[1][n], U.u[2][n]};
  Simulator sim(cfg);
  double t = 0.0;
  for (int i = 0; i < 300; ++i, t += cfg.dt) U = sim.step(U, t, cfg.dt);
  const ZeroModeState s = zero_mode_evolve(s0, 3.0, cfg.nu, eta, l);
  CHECK(std::abs(U.u[0][n] - s.u1) < 1e-8);
  CHECK(std::abs(U.u[1][n] - s.u2) < 1e-8);
  CHECK(std::abs(U.u[2][n] - s.u3) < 1e-8);
}

TEST_CASE("time-step refinement converges at the expected order", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  const GridSpec& g = cfg.grid;
  for (Integrator integ : {Integrator::rk4, Integrator::midpoint}) {
    cfg.integrator = integ;
    Simulator sim(cfg);
    VelocityField U0 = testing::random_velocity(g, 17, 0.0, 2);
    U0 *= 0.5 / sobolev_norm(U0, 0.0);
    auto integrate = [&](double dt) {
      VelocityField U = U0;
      const int n = int(std::lround(1.0 / dt));
      for (int i = 0; i < n; ++i) U = sim.step(U, i * dt, dt);
      return U;
    };
    const VelocityField ref = integrate(0.1 / 16);
    const double e1 = field_distance(integrate(0.1), ref);
    const double e2 = field_distance(integrate(0.05), ref);
    INFO("errors " << e1 << " " << e2);
    CHECK(e1 / e2 >= 3.5);
  }
}

TEST_CASE("initial conditions", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.ic_kind = IcKind::random_band;
  const VelocityField U = make_initial_condition(cfg);
  CHECK_THAT(sobolev_norm(U, cfg.sigma), WithinRel(cfg.eps, 1e-12));
  CHECK(max_divergence(U, 0.0) < 1e-15);
  for (const auto& c : U.u) CHECK(hermitian_defect(c) < 1e-15);

  cfg.ic_kind = IcKind::single_mode;
  cfg.mode_eta = 2.0 * pi / cfg.grid.ly;
  const VelocityField S = make_initial_condition(cfg);
  const std::size_t n = cfg.grid.flat(1, 1, 1);
  const double amp = std::sqrt(std::norm(S.u[0][n]) + std::norm(S.u[1][n]) + std::norm(S.u[2][n]));
  CHECK_THAT(amp, WithinRel(cfg.eps, 1e-14));
  CHECK(max_divergence(S, 0.0) < 1e-15);

  cfg.mode_k = 0;
  cfg.mode_eta = 0.0;
  cfg.mode_l = 0;
  CHECK_THROWS_AS(make_initial_condition(cfg), std::invalid_argument);
  cfg.mode_k = 7;
  cfg.mode_l = 1;
  CHECK_THROWS_AS(make_initial_condition(cfg), std::invalid_argument);
}

TEST_CASE("eps = 0 stays identically zero", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.eps = 0.0;
  const Trajectory tr = run(cfg);
  CHECK_FALSE(tr.failed);
  for (const auto& r : tr.reports) CHECK(r.at("U_L2") == 0.0);
  CHECK(field_max(tr.snapshots.back()) == 0.0);
}

TEST_CASE("runs are deterministic", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.eps = 0.5;
  const Trajectory a = run(cfg);
  const Trajectory b = run(cfg);
  REQUIRE(a.reports.size() == b.reports.size());
  CHECK(field_distance(a.snapshots.back(), b.snapshots.back()) == 0.0);
  for (std::size_t i = 0; i < a.reports.size(); ++i) CHECK(a.reports[i].values == b.reports[i].values);
  cfg.seed = 2;
  const Trajectory c = run(cfg);
  CHECK(field_distance(a.snapshots.back(), c.snapshots.back()) > 0.0);
}

TEST_CASE("blow-up is detected and captured", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.eps = 1.0;
  cfg.blowup_cap = 1e-3;
  CHECK_THROWS_AS(run(cfg), SimulationError);
  const Trajectory tr = run_capturing(cfg);
  CHECK(tr.failed);
  CHECK(tr.failure_time > 0.0);
  CHECK_FALSE(tr.failure_message.empty());
  CHECK(tr.reports.size() >= 1);
}

TEST_CASE("report cadence and trajectory bookkeeping", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.t_end = 0.25;
  cfg.diag_cadence = 10;
  cfg.snapshot_cadence = 5;
  int calls = 0;
  const Trajectory tr = run(cfg, [&](const VelocityField&, const EnergyReport&) { ++calls; });
  CHECK(tr.steps == 25);
  CHECK(tr.reports.size() == 4);  // 0, 10, 20, 25
  CHECK(calls == 4);
  CHECK(tr.snapshots.size() == 6);  // 0, 5, 10, 15, 20, 25
  CHECK_THAT(tr.reports.back().t, WithinAbs(0.25, 1e-14));
  CHECK(tr.max_divergence < 1e-12);
}

TEST_CASE("snapshot round trip and restart from file", "[nonlinear_sim]") {
  SimConfig cfg = small_config();
  cfg.eps = 0.2;
  cfg.t_end = 0.3;
  const Trajectory tr = run(cfg);
  const VelocityField& last = tr.snapshots.back();

  std::stringstream ss;
  write_snapshot(ss, last, cfg.nu);
  const Snapshot s = read_snapshot(ss);
  CHECK(s.nu == cfg.nu);
  CHECK(s.field.time() == last.time());
  CHECK(field_distance(s.field, last) == 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "rotcouette_snapshot_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "snap.csv").string();
  write_snapshot(path, last, cfg.nu);

  SimConfig restart = cfg;
  restart.ic_kind = IcKind::file;
  restart.ic_file = path;
  restart.t_end = 0.6;
  const Trajectory tail = run(restart);
  CHECK_THAT(tail.reports.front().t, WithinAbs(0.3, 1e-14));

  SimConfig whole = cfg;
  whole.t_end = 0.6;
  const Trajectory full = run(whole);
  CHECK(field_distance(tail.snapshots.back(), full.snapshots.back()) < 1e-12);

  std::stringstream bad("not a snapshot\n");
  CHECK_THROWS(read_snapshot(bad));
  std::filesystem::remove_all(dir);
}

#pragma once

// Weighted energy quantities computed from velocity snapshots.
//
// Columns of an EnergyReport are fixed and listed in kEnergyColumns.
// Instantaneous columns are H^N (or H^{N-1}) norms at the report time.
// Columns prefixed "L2t_" are square roots of trapezoid-rule time integrals
// of the squared instantaneous integrands. Columns prefixed "line_" are the
// left-hand sides of the bootstrap hypotheses (sup-in-time norm plus the
// L2-in-time dissipation terms) that get compared against 8x their bounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "multipliers.hpp"
#include "regression.hpp"
#include "velocity_field.hpp"

namespace rotcouette {

struct DiagnosticsConfig {
  double nu = 1e-2;
  double sigma = 5.0;  ///< N = sigma - 2
  double C0 = 100.0;
  double C1 = 10.0;
  double window_constant = 1000.0;

  double N() const { return sigma - 2.0; }
  void validate() const {
    if (!(nu > 0.0 && nu < 1.0))
      throw std::invalid_argument("DiagnosticsConfig: nu must lie in (0, 1)");
    if (!(sigma > 4.5))
      throw std::invalid_argument("DiagnosticsConfig: sigma must be > 9/2");
    if (!(C0 > 0.0 && C1 > 0.0))
      throw std::invalid_argument("DiagnosticsConfig: C0 and C1 must be > 0");
  }
};

/// Q^i = Delta_L U^i, symbol -w.
inline std::array<SpectralField, 3> compute_Q(const VelocityField& U, double t) {
  std::array<SpectralField, 3> q{SpectralField(U.grid(), t), SpectralField(U.grid(), t),
                                 SpectralField(U.grid(), t)};
  U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const double w = w_symbol(t, kv);
    for (int c = 0; c < 3; ++c) q[c][n] = -w * U.u[c][n];
  });
  return q;
}

/// Good unknowns: symbols -|k,l| sqrt(w) on U1 and -|k| sqrt(w) on U2.
inline std::array<SpectralField, 2> compute_K_check(const VelocityField& U, double t) {
  std::array<SpectralField, 2> out{SpectralField(U.grid(), t), SpectralField(U.grid(), t)};
  U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const double sw = std::sqrt(w_symbol(t, kv));
    out[0][n] = -kv.horizontal() * sw * U.u[0][n];
    out[1][n] = -double(std::abs(kv.k)) * sw * U.u[1][n];
  });
  return out;
}

/// Inverse of compute_K_check where the prefactors are non-zero; other
/// modes come back as zero.
inline std::array<SpectralField, 2> velocity_from_K_check(
    const std::array<SpectralField, 2>& K, double t) {
  const GridSpec& g = K[0].grid();
  std::array<SpectralField, 2> out{SpectralField(g, t), SpectralField(g, t)};
  K[0].for_each_mode([&](std::size_t n, int k, int jy, int l) {
    const WaveVector kv{k, g.eta_of(jy), l};
    const double sw = std::sqrt(w_symbol(t, kv));
    const double p1 = kv.horizontal() * sw;
    const double p2 = std::abs(k) * sw;
    if (p1 > 0.0) out[0][n] = -K[0][n] / p1;
    if (p2 > 0.0) out[1][n] = -K[1][n] / p2;
  });
  return out;
}

inline constexpr std::array<std::string_view, 62> kEnergyColumns = {
    // instantaneous, H^N unless noted
    "MK1_HN", "MK2_HN", "mMQ3_HN",
    "Q0_1_HN", "Q0_2_HN", "Q0_3_HN",
    "U0_1_HNm1", "U0_2_HNm1", "U0_3_HNm1",
    "Uneq_1_HN", "Uneq_2_HN", "Uneq_3_HN", "Uneq_HN",
    "sqrtMdotM_K1_HN", "sqrtMdotM_K2_HN", "sqrtMdotM_mQ3_HN",
    "nuhalf_gradL_MK1_HN", "nuhalf_gradL_MK2_HN", "nuhalf_gradL_mMQ3_HN",
    "nuhalf_grad_Q0_1_HN", "nuhalf_grad_Q0_2_HN", "nuhalf_grad_Q0_3_HN",
    "nuhalf_grad_U0_1_HNm1", "nuhalf_grad_U0_2_HNm1", "nuhalf_grad_U0_3_HNm1",
    "K12_HN", "mQ3_HN", "gradL_U12_HN", "nuhalf_gradL_K12_HN",
    "U_L2", "U12neq_L2", "U3neq_L2", "U0_L2",
    // accumulated
    "L2t_sqrtMdotM_K1", "L2t_sqrtMdotM_K2", "L2t_sqrtMdotM_mQ3",
    "L2t_nuhalf_gradL_MK1", "L2t_nuhalf_gradL_MK2", "L2t_nuhalf_gradL_mMQ3",
    "L2t_nuhalf_grad_Q0_1", "L2t_nuhalf_grad_Q0_2", "L2t_nuhalf_grad_Q0_3",
    "L2t_nuhalf_grad_U0_1", "L2t_nuhalf_grad_U0_2", "L2t_nuhalf_grad_U0_3",
    "L2t_nuhalf_U0_2",
    "L2t_K12", "L2t_mQ3", "L2t_gradL_U12", "L2t_nuhalf_gradL_K12",
    "L2t_sqrtMdotM_K12",
    // bootstrap hypothesis left-hand sides
    "line_K1", "line_K2", "line_Q3",
    "line_Q0_1", "line_Q0_2", "line_Q0_3",
    "line_U0_1", "line_U0_2", "line_U0_3",
    // bookkeeping
    "n_flags", "divergence_max",
};
static_assert(kEnergyColumns.back() == "divergence_max");

inline std::size_t energy_column(std::string_view name) {
  const auto it = std::find(kEnergyColumns.begin(), kEnergyColumns.end(), name);
  if (it == kEnergyColumns.end())
    throw std::out_of_range("energy_column: unknown column " + std::string(name));
  return std::size_t(it - kEnergyColumns.begin());
}

struct EnergyReport {
  double t = 0.0;
  std::array<double, kEnergyColumns.size()> values{};
  /// Names of bootstrap lines above 8x their bound. Suffixed "@t<1" before
  /// t = 1, where the hypotheses are not claimed.
  std::vector<std::string> flags;

  double at(std::string_view name) const { return values[energy_column(name)]; }
  double& at(std::string_view name) { return values[energy_column(name)]; }
};

/// Per-run state for the time integrals and sup-in-time terms.
struct BootstrapAccumulators {
  bool started = false;
  double last_t = 0.0;
  double eps = 0.0;  ///< ||u_in||_{H^sigma}, set on the first report
  // squared instantaneous integrands at last_t
  std::vector<double> last_sq;
  // running integrals of the squared integrands
  std::vector<double> integral;
  // running sup of the instantaneous norms in the bootstrap lines
  std::array<double, 9> sup{};
};

namespace detail {

// Integrated quantity: (instantaneous column, accumulated column).
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 17>
    kAccumulated = {{
        {"sqrtMdotM_K1_HN", "L2t_sqrtMdotM_K1"},
        {"sqrtMdotM_K2_HN", "L2t_sqrtMdotM_K2"},
        {"sqrtMdotM_mQ3_HN", "L2t_sqrtMdotM_mQ3"},
        {"nuhalf_gradL_MK1_HN", "L2t_nuhalf_gradL_MK1"},
        {"nuhalf_gradL_MK2_HN", "L2t_nuhalf_gradL_MK2"},
        {"nuhalf_gradL_mMQ3_HN", "L2t_nuhalf_gradL_mMQ3"},
        {"nuhalf_grad_Q0_1_HN", "L2t_nuhalf_grad_Q0_1"},
        {"nuhalf_grad_Q0_2_HN", "L2t_nuhalf_grad_Q0_2"},
        {"nuhalf_grad_Q0_3_HN", "L2t_nuhalf_grad_Q0_3"},
        {"nuhalf_grad_U0_1_HNm1", "L2t_nuhalf_grad_U0_1"},
        {"nuhalf_grad_U0_2_HNm1", "L2t_nuhalf_grad_U0_2"},
        {"nuhalf_grad_U0_3_HNm1", "L2t_nuhalf_grad_U0_3"},
        {"U0_2_HNm1", "L2t_nuhalf_U0_2"},  // weighted by nu below
        {"K12_HN", "L2t_K12"},
        {"mQ3_HN", "L2t_mQ3"},
        {"gradL_U12_HN", "L2t_gradL_U12"},
        {"nuhalf_gradL_K12_HN", "L2t_nuhalf_gradL_K12"},
    }};

struct LineSpec {
  std::string_view name;
  std::string_view sup_column;
  std::array<std::string_view, 3> integrals;  // empty entries are skipped
};

inline constexpr std::array<LineSpec, 9> kLines = {{
    {"line_K1", "MK1_HN", {"L2t_sqrtMdotM_K1", "L2t_nuhalf_gradL_MK1", ""}},
    {"line_K2", "MK2_HN", {"L2t_sqrtMdotM_K2", "L2t_nuhalf_gradL_MK2", ""}},
    {"line_Q3", "mMQ3_HN", {"L2t_sqrtMdotM_mQ3", "L2t_nuhalf_gradL_mMQ3", ""}},
    {"line_Q0_1", "Q0_1_HN", {"L2t_nuhalf_grad_Q0_1", "", ""}},
    {"line_Q0_2", "Q0_2_HN", {"L2t_nuhalf_grad_Q0_2", "", ""}},
    {"line_Q0_3", "Q0_3_HN", {"L2t_nuhalf_grad_Q0_3", "", ""}},
    {"line_U0_1", "U0_1_HNm1", {"L2t_nuhalf_grad_U0_1", "", ""}},
    {"line_U0_2", "U0_2_HNm1", {"L2t_nuhalf_grad_U0_2", "L2t_nuhalf_U0_2", ""}},
    {"line_U0_3", "U0_3_HNm1", {"L2t_nuhalf_grad_U0_3", "", ""}},
}};

/// Bound shapes for the lines in kLines order.
inline std::array<double, 9> line_bounds(double eps, const DiagnosticsConfig& cfg) {
  const double nu = cfg.nu;
  const double a = eps;
  const double b = cfg.C1 * eps / nu;
  const double c = cfg.C0 * eps / nu;
  return {a, a, cfg.C0 * eps / std::cbrt(nu), a, b, c, a, b, c};
}

}  // namespace detail

/// Instantaneous columns only (no accumulators, no flags).
inline EnergyReport instantaneous_report(const VelocityField& U, double t,
                                         const DiagnosticsConfig& cfg) {
  const MultiplierParams mp{cfg.nu, cfg.window_constant};
  const double N = cfg.N();
  const double nu = cfg.nu;
  const GridSpec& g = U.grid();

  // squared sums
  double MK1 = 0, MK2 = 0, mMQ3 = 0;
  std::array<double, 3> Q0{}, U0{}, Uneq{}, gQ0{}, gU0{};
  double sK1 = 0, sK2 = 0, sQ3 = 0, gMK1 = 0, gMK2 = 0, gQ3 = 0;
  double K12 = 0, mQ3 = 0, gU12 = 0, gK12 = 0;
  double UL2 = 0, U12neq = 0, U3neq = 0, U0L2 = 0;

  U.for_each_mode([&](std::size_t n, const WaveVector& kv) {
    const complex u1 = U.u[0][n], u2 = U.u[1][n], u3 = U.u[2][n];
    const double a1 = std::norm(u1), a2 = std::norm(u2), a3 = std::norm(u3);
    const double e = a1 + a2 + a3;
    if (e == 0.0) return;
    UL2 += e;
    const double br2 = 1.0 + double(kv.k) * kv.k + kv.eta * kv.eta + double(kv.l) * kv.l;
    const double wN = std::pow(br2, N);
    const double w = w_symbol(t, kv);
    if (kv.k == 0) {
      U0L2 += e;
      const double wNm1 = std::pow(br2, N - 1.0);
      const double arr[3] = {a1, a2, a3};
      for (int c = 0; c < 3; ++c) {
        Q0[c] += wN * w * w * arr[c];
        gQ0[c] += wN * w * w * w * arr[c];
        U0[c] += wNm1 * arr[c];
        gU0[c] += wNm1 * w * arr[c];
      }
      return;
    }
    U12neq += a1 + a2;
    U3neq += a3;
    Uneq[0] += wN * a1;
    Uneq[1] += wN * a2;
    Uneq[2] += wN * a3;
    const double M = M_closed(t, kv, mp);
    const double mdm = -M_log_derivative(t, kv, mp) * M * M;  // -M' M
    const double m = m_exact(t, kv, mp);
    const double k1 = kv.horizontal() * kv.horizontal() * w * a1;  // |K1|^2
    const double k2 = double(kv.k) * kv.k * w * a2;                // |K2|^2
    const double q3 = w * w * a3;                                  // |Q3|^2
    MK1 += wN * M * M * k1;
    MK2 += wN * M * M * k2;
    mMQ3 += wN * m * m * M * M * q3;
    sK1 += wN * mdm * k1;
    sK2 += wN * mdm * k2;
    sQ3 += wN * mdm * m * m * q3;
    gMK1 += wN * w * M * M * k1;
    gMK2 += wN * w * M * M * k2;
    gQ3 += wN * w * m * m * M * M * q3;
    K12 += wN * (k1 + k2);
    mQ3 += wN * m * m * q3;
    gU12 += wN * w * (a1 + a2);
    gK12 += wN * w * (k1 + k2);
  });

  const double cm = g.cell_measure();
  auto nrm = [&](double s) { return std::sqrt(s * cm); };
  auto nrm_nu = [&](double s) { return std::sqrt(nu * s * cm); };

  EnergyReport r;
  r.t = t;
  r.at("MK1_HN") = nrm(MK1);
  r.at("MK2_HN") = nrm(MK2);
  r.at("mMQ3_HN") = nrm(mMQ3);
  const char* q0n[3] = {"Q0_1_HN", "Q0_2_HN", "Q0_3_HN"};
  const char* u0n[3] = {"U0_1_HNm1", "U0_2_HNm1", "U0_3_HNm1"};
  const char* uneqn[3] = {"Uneq_1_HN", "Uneq_2_HN", "Uneq_3_HN"};
  const char* gq0n[3] = {"nuhalf_grad_Q0_1_HN", "nuhalf_grad_Q0_2_HN",
                         "nuhalf_grad_Q0_3_HN"};
  const char* gu0n[3] = {"nuhalf_grad_U0_1_HNm1", "nuhalf_grad_U0_2_HNm1",
                         "nuhalf_grad_U0_3_HNm1"};
  for (int c = 0; c < 3; ++c) {
    r.at(q0n[c]) = nrm(Q0[c]);
    r.at(u0n[c]) = nrm(U0[c]);
    r.at(uneqn[c]) = nrm(Uneq[c]);
    r.at(gq0n[c]) = nrm_nu(gQ0[c]);
    r.at(gu0n[c]) = nrm_nu(gU0[c]);
  }
  r.at("Uneq_HN") = nrm(Uneq[0] + Uneq[1] + Uneq[2]);
  r.at("sqrtMdotM_K1_HN") = nrm(sK1);
  r.at("sqrtMdotM_K2_HN") = nrm(sK2);
  r.at("sqrtMdotM_mQ3_HN") = nrm(sQ3);
  r.at("nuhalf_gradL_MK1_HN") = nrm_nu(gMK1);
  r.at("nuhalf_gradL_MK2_HN") = nrm_nu(gMK2);
  r.at("nuhalf_gradL_mMQ3_HN") = nrm_nu(gQ3);
  r.at("K12_HN") = nrm(K12);
  r.at("mQ3_HN") = nrm(mQ3);
  r.at("gradL_U12_HN") = nrm(gU12);
  r.at("nuhalf_gradL_K12_HN") = nrm_nu(gK12);
  r.at("U_L2") = nrm(UL2);
  r.at("U12neq_L2") = nrm(U12neq);
  r.at("U3neq_L2") = nrm(U3neq);
  r.at("U0_L2") = nrm(U0L2);
  r.at("divergence_max") = max_divergence(U, t);
  return r;
}

/// Full report: instantaneous columns, trapezoid update of the accumulators,
/// bootstrap lines and flags. The first call fixes eps = ||U||_{H^sigma}.
inline EnergyReport bootstrap_report(const VelocityField& U, double t,
                                     const DiagnosticsConfig& cfg,
                                     BootstrapAccumulators& acc) {
  EnergyReport r = instantaneous_report(U, t, cfg);
  const auto& A = detail::kAccumulated;

  std::vector<double> sq(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    double v = r.at(A[i].first);
    if (A[i].second == "L2t_nuhalf_U0_2") v *= std::sqrt(cfg.nu);
    sq[i] = v * v;
  }
  if (!acc.started) {
    acc.started = true;
    acc.eps = sobolev_norm(U, cfg.sigma);
    acc.integral.assign(A.size(), 0.0);
  } else {
    if (t < acc.last_t)
      throw std::invalid_argument("bootstrap_report: time went backwards");
    const double dt = t - acc.last_t;
    for (std::size_t i = 0; i < A.size(); ++i)
      acc.integral[i] += 0.5 * dt * (acc.last_sq[i] + sq[i]);
  }
  acc.last_sq = sq;
  acc.last_t = t;
  for (std::size_t i = 0; i < A.size(); ++i) r.at(A[i].second) = std::sqrt(acc.integral[i]);
  r.at("L2t_sqrtMdotM_K12") = std::hypot(r.at("L2t_sqrtMdotM_K1"), r.at("L2t_sqrtMdotM_K2"));

  const auto bounds = detail::line_bounds(acc.eps, cfg);
  for (std::size_t i = 0; i < detail::kLines.size(); ++i) {
    const auto& line = detail::kLines[i];
    acc.sup[i] = std::max(acc.sup[i], r.at(line.sup_column));
    double v = acc.sup[i];
    for (auto name : line.integrals)
      if (!name.empty()) v += r.at(name);
    r.at(line.name) = v;
    if (v > 8.0 * bounds[i]) {
      std::string flag(line.name);
      if (t < 1.0) flag += "@t<1";
      r.flags.push_back(std::move(flag));
    }
  }
  r.at("n_flags") = double(r.flags.size());
  return r;
}

/// ||K_!=||_{L2 H^N} / (nu^{-1/6} (||sqrt(-M'M) K||_{L2 H^N} +
/// nu^{1/2} ||grad_L K||_{L2 H^N})). Pointwise coercivity of M bounds this by
/// 1 / (infimum of M_coercivity).
inline double dissipation_ratio(const EnergyReport& r, double nu) {
  const double lhs = r.at("L2t_K12");
  const double rhs =
      std::pow(nu, -1.0 / 6.0) * (r.at("L2t_sqrtMdotM_K12") + r.at("L2t_nuhalf_gradL_K12"));
  return rhs > 0.0 ? lhs / rhs : 0.0;
}

/// Decay-rate fit of accumulated quantities across a viscosity grid.
struct RateFit {
  std::string quantity;
  double predicted = 0.0;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double residual_rms = std::numeric_limits<double>::quiet_NaN();
  bool available = false;  ///< false when some run has a non-positive value
};

struct RateRun {
  double nu = 0.0;
  EnergyReport final_report;
};

/// Least-squares fit of log(quantity) against log(nu) for L2t_K12 (-1/6),
/// L2t_mQ3 (-1/2) and L2t_gradL_U12 (-1/6).
inline std::vector<RateFit> decay_rate_fits(std::span<const RateRun> runs) {
  std::vector<double> nus;
  for (const auto& r : runs) nus.push_back(r.nu);
  std::sort(nus.begin(), nus.end());
  nus.erase(std::unique(nus.begin(), nus.end()), nus.end());
  if (nus.size() < 3)
    throw std::invalid_argument("decay_rate_fits: need runs at >= 3 distinct nu values");

  const std::array<std::pair<const char*, double>, 3> targets = {
      {{"L2t_K12", -1.0 / 6.0}, {"L2t_mQ3", -0.5}, {"L2t_gradL_U12", -1.0 / 6.0}}};
  std::vector<RateFit> fits;
  for (const auto& [name, pred] : targets) {
    RateFit f;
    f.quantity = name;
    f.predicted = pred;
    std::vector<double> x, y;
    bool ok = true;
    for (const auto& r : runs) {
      const double v = r.final_report.at(name);
      if (!(v > 0.0) || !std::isfinite(v)) {
        ok = false;
        break;
      }
      x.push_back(std::log(r.nu));
      y.push_back(std::log(v));
    }
    if (ok) {
      const LinearFit lf = linear_fit(x, y);
      f.exponent = lf.slope;
      f.intercept = lf.intercept;
      f.residual_rms = lf.residual_rms;
      f.available = true;
    }
    fits.push_back(f);
  }
  return fits;
}

}  // namespace rotcouette

#pragma once

// epsilon-nu sweeps of nonlinear runs, a finite-horizon stability proxy, and
// the power-law fit eps*(nu) ~ nu^gamma.

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "nonlinear_sim.hpp"
#include "regression.hpp"

namespace rotcouette {

enum class Stability { stable, unstable, inconclusive };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    default: return "inconclusive";
  }
}

inline Stability stability_from_string(std::string_view s) {
  if (s == "stable") return Stability::stable;
  if (s == "unstable") return Stability::unstable;
  if (s == "inconclusive") return Stability::inconclusive;
  throw std::invalid_argument("unknown stability label: " + std::string(s));
}

/// min(50, 10 nu^{-1/3})
inline double default_horizon(double nu) { return std::min(50.0, 10.0 / std::cbrt(nu)); }

struct ClassifyCriteria {
  double horizon = 0.0;  ///< <= 0 selects default_horizon(nu)
  double growth_factor = 10.0;
  std::string norm_name = "Uneq_HN";

  void validate() const {
    if (!(growth_factor > 1.0))
      throw std::invalid_argument("ClassifyCriteria: growth_factor must be > 1");
    energy_column(norm_name);  // throws on unknown names
  }
  double horizon_for(double nu) const { return horizon > 0.0 ? horizon : default_horizon(nu); }
};

struct RunClassification {
  Stability verdict = Stability::inconclusive;
  double initial_norm = 0.0;
  double peak_norm = 0.0;
  double t_peak = 0.0;
  double final_norm = 0.0;
  bool blew_up = false;
};

/// Unstable on blow-up or when the tracked norm exceeds growth_factor times
/// ||u_in||_{H^N}; stable when the run reached the horizon and ended below
/// its initial value (or stayed identically zero); inconclusive otherwise.
inline RunClassification classify_run(const Trajectory& traj, const ClassifyCriteria& crit,
                                      double horizon = 0.0) {
  RunClassification c;
  c.blew_up = traj.failed;
  if (traj.reports.empty()) {
    c.verdict = traj.failed ? Stability::unstable : Stability::inconclusive;
    return c;
  }
  const std::size_t col = energy_column(crit.norm_name);
  c.initial_norm = traj.reports.front().values[col];
  c.final_norm = traj.reports.back().values[col];
  c.t_peak = traj.reports.front().t;
  for (const auto& r : traj.reports) {
    if (r.values[col] > c.peak_norm) {
      c.peak_norm = r.values[col];
      c.t_peak = r.t;
    }
  }
  const double reference = std::max(traj.initial_full_HN, c.initial_norm);
  if (traj.failed || c.peak_norm > crit.growth_factor * reference) {
    c.verdict = Stability::unstable;
    return c;
  }
  const bool reached = horizon <= 0.0 || traj.reports.back().t >= horizon - 1e-9;
  const bool decayed =
      c.final_norm < c.initial_norm || (c.final_norm == 0.0 && c.initial_norm == 0.0);
  c.verdict = reached && decayed ? Stability::stable : Stability::inconclusive;
  return c;
}

/// Geometric eps grid per nu: points values from min to max, each multiplied
/// by nu^nu_power.
struct EpsGrid {
  double min = 1e-6;
  double max = 1e-2;
  int points = 5;
  double nu_power = 0.0;

  std::vector<double> values(double nu) const {
    std::vector<double> v;
    const double scale = std::pow(nu, nu_power);
    for (int i = 0; i < points; ++i) {
      const double f = points == 1 ? 0.0 : double(i) / (points - 1);
      v.push_back(scale * min * std::pow(max / min, f));
    }
    return v;
  }
};

struct SweepConfig {
  std::vector<double> nu_grid;
  EpsGrid eps_grid;
  SimConfig base;
  ClassifyCriteria classify;
  bool bisect = false;
  double bisect_rel_width = 0.1;
  int threads = 1;
  std::string checkpoint_dir;  ///< empty disables per-cell checkpoints

  void validate() const {
    if (nu_grid.empty()) throw std::invalid_argument("SweepConfig: nu_grid is empty");
    for (double nu : nu_grid)
      if (!(nu > 0.0 && nu < 1.0))
        throw std::invalid_argument("SweepConfig: nu values must lie in (0, 1)");
    if (eps_grid.points < 1) throw std::invalid_argument("SweepConfig: eps points must be >= 1");
    if (!(eps_grid.min > 0.0 && eps_grid.max >= eps_grid.min))
      throw std::invalid_argument("SweepConfig: eps grid must satisfy 0 < min <= max");
    if (!(bisect_rel_width > 0.0))
      throw std::invalid_argument("SweepConfig: bisect_rel_width must be > 0");
    if (threads < 1) throw std::invalid_argument("SweepConfig: threads must be >= 1");
    classify.validate();
  }
};

struct CellResult {
  double nu = 0.0;
  double eps = 0.0;
  Stability raw = Stability::inconclusive;      ///< classifier output
  Stability verdict = Stability::inconclusive;  ///< after monotone repair
  RunClassification detail;
  bool from_bisection = false;
  std::string error;  ///< non-empty when the run threw something other than blow-up
};

struct NuSummary {
  double nu = 0.0;
  double eps_star = std::numeric_limits<double>::quiet_NaN();
  /// "none", "above" (largest eps on the grid is stable) or "below" (no
  /// stable eps on the grid).
  std::string censored = "none";
};

struct GammaFit {
  bool available = false;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  double residual_rms = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

struct ThresholdResult {
  std::vector<CellResult> cells;
  std::vector<NuSummary> per_nu;
  GammaFit fit;
  std::vector<std::string> notes;
};

/// Slope of log eps* against log nu with a two-sided t-interval at the given
/// confidence (available when n >= 3; n = 2 gives the slope only).
inline GammaFit fit_gamma(std::span<const double> nu, std::span<const double> eps_star,
                          double confidence = 0.95) {
  GammaFit g;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!(eps_star[i] > 0.0) || !std::isfinite(eps_star[i])) continue;
    x.push_back(std::log(nu[i]));
    y.push_back(std::log(eps_star[i]));
  }
  g.n = x.size();
  if (g.n < 2) return g;
  const LinearFit f = linear_fit(x, y);
  g.available = true;
  g.gamma = f.slope;
  g.intercept = f.intercept;
  g.residual_rms = f.residual_rms;
  if (g.n >= 3) {
    const boost::math::students_t dist(double(g.n - 2));
    const double q = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
    g.ci_low = f.slope - q * f.slope_stderr;
    g.ci_high = f.slope + q * f.slope_stderr;
  }
  return g;
}

namespace detail {

inline std::string cell_checkpoint_path(const std::string& dir, double nu, double eps) {
  return (std::filesystem::path(dir) / fmt::format("cell_nu{:.17g}_eps{:.17g}.json", nu, eps))
      .string();
}

inline void save_cell(const std::string& path, const CellResult& c) {
  nlohmann::json j;
  j["nu"] = c.nu;
  j["eps"] = c.eps;
  j["raw"] = std::string(to_string(c.raw));
  j["initial_norm"] = c.detail.initial_norm;
  j["peak_norm"] = c.detail.peak_norm;
  j["t_peak"] = c.detail.t_peak;
  j["final_norm"] = c.detail.final_norm;
  j["blew_up"] = c.detail.blew_up;
  j["from_bisection"] = c.from_bisection;
  j["error"] = c.error;
  // write-then-rename so an interrupted sweep never leaves a torn file
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline bool load_cell(const std::string& path, CellResult& c) {
  std::ifstream is(path);
  if (!is) return false;
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    c.nu = j.at("nu").get<double>();
    c.eps = j.at("eps").get<double>();
    c.raw = stability_from_string(j.at("raw").get<std::string>());
    c.detail.verdict = c.raw;
    c.detail.initial_norm = j.at("initial_norm").get<double>();
    c.detail.peak_norm = j.at("peak_norm").get<double>();
    c.detail.t_peak = j.at("t_peak").get<double>();
    c.detail.final_norm = j.at("final_norm").get<double>();
    c.detail.blew_up = j.at("blew_up").get<bool>();
    c.from_bisection = j.at("from_bisection").get<bool>();
    c.error = j.at("error").get<std::string>();
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

inline CellResult run_cell(const SweepConfig& cfg, double nu, double eps, bool bisection) {
  CellResult c;
  c.nu = nu;
  c.eps = eps;
  c.from_bisection = bisection;
  const std::string ckpt =
      cfg.checkpoint_dir.empty() ? std::string() : cell_checkpoint_path(cfg.checkpoint_dir, nu, eps);
  if (!ckpt.empty() && load_cell(ckpt, c)) {
    c.verdict = c.raw;
    return c;
  }
  SimConfig sc = cfg.base;
  sc.nu = nu;
  sc.eps = eps;
  const double horizon = cfg.classify.horizon_for(nu);
  sc.t_end = horizon;
  try {
    const Trajectory traj = run_capturing(sc);
    c.detail = classify_run(traj, cfg.classify, horizon);
    c.raw = c.detail.verdict;
  } catch (const std::exception& e) {
    c.raw = Stability::inconclusive;
    c.error = e.what();
  }
  c.verdict = c.raw;
  if (!ckpt.empty()) save_cell(ckpt, c);
  return c;
}

/// Runs jobs[i] -> out[i] on `threads` workers.
inline void run_cells(const SweepConfig& cfg,
                      const std::vector<std::pair<double, double>>& jobs, bool bisection,
                      std::vector<CellResult>& out) {
  out.assign(jobs.size(), CellResult{});
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      out[i] = run_cell(cfg, jobs[i].first, jobs[i].second, bisection);
  };
  const int n = std::max(1, std::min<int>(cfg.threads, int(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

/// Cells of one nu, sorted by eps.
inline std::vector<CellResult*> cells_of(std::vector<CellResult>& cells, double nu) {
  std::vector<CellResult*> v;
  for (auto& c : cells)
    if (c.nu == nu) v.push_back(&c);
  std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->eps < b->eps; });
  return v;
}

}  // namespace detail

/// Marks every (smaller unstable, larger stable) pair at equal nu as
/// inconclusive. Returns one note per repaired pair.
inline std::vector<std::string> monotone_repair(std::vector<CellResult>& cells) {
  std::vector<std::string> notes;
  std::vector<double> nus;
  for (auto& c : cells) {
    c.verdict = c.raw;
    nus.push_back(c.nu);
  }
  std::sort(nus.begin(), nus.end());
  nus.erase(std::unique(nus.begin(), nus.end()), nus.end());
  for (double nu : nus) {
    auto v = detail::cells_of(cells, nu);
    std::vector<Stability> raw;
    for (auto* c : v) raw.push_back(c->raw);
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j)
        if (raw[i] == Stability::unstable && raw[j] == Stability::stable) {
          v[i]->verdict = Stability::inconclusive;
          v[j]->verdict = Stability::inconclusive;
          notes.push_back(fmt::format(
              "non-monotone at nu={:.6g}: eps={:.6g} unstable but eps={:.6g} stable", nu,
              v[i]->eps, v[j]->eps));
        }
  }
  return notes;
}

/// eps* per nu from repaired cells.
inline std::vector<NuSummary> summarize(std::vector<CellResult>& cells,
                                        const std::vector<double>& nu_grid) {
  std::vector<NuSummary> out;
  for (double nu : nu_grid) {
    NuSummary s;
    s.nu = nu;
    auto v = detail::cells_of(cells, nu);
    CellResult* best = nullptr;
    for (auto* c : v)
      if (c->verdict == Stability::stable) best = c;
    if (best == nullptr) {
      s.censored = "below";
    } else {
      s.eps_star = best->eps;
      bool larger_unstable = false;
      for (auto* c : v)
        if (c->eps > best->eps && c->verdict == Stability::unstable) larger_unstable = true;
      if (!larger_unstable) s.censored = "above";
    }
    out.push_back(s);
  }
  return out;
}

inline ThresholdResult sweep(const SweepConfig& cfg) {
  cfg.validate();
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
  ThresholdResult res;

  std::vector<std::pair<double, double>> jobs;
  for (double nu : cfg.nu_grid)
    for (double eps : cfg.eps_grid.values(nu)) jobs.emplace_back(nu, eps);
  detail::run_cells(cfg, jobs, false, res.cells);
  res.notes = monotone_repair(res.cells);

  if (cfg.bisect) {
    // geometric bisection between the largest stable and the next unstable eps
    int rounds = 0;
    for (;;) {
      std::vector<std::pair<double, double>> more;
      for (const auto& s : summarize(res.cells, cfg.nu_grid)) {
        if (s.censored != "none") continue;
        double upper = std::numeric_limits<double>::infinity();
        for (auto* c : detail::cells_of(res.cells, s.nu))
          if (c->eps > s.eps_star && c->verdict == Stability::unstable)
            upper = std::min(upper, c->eps);
        if (!(upper / s.eps_star > 1.0 + cfg.bisect_rel_width)) continue;
        const double mid = std::sqrt(upper * s.eps_star);
        bool seen = false;
        for (auto* c : detail::cells_of(res.cells, s.nu)) seen = seen || c->eps == mid;
        if (!seen) more.emplace_back(s.nu, mid);
      }
      if (more.empty() || ++rounds > 64) break;
      std::vector<CellResult> extra;
      detail::run_cells(cfg, more, true, extra);
      res.cells.insert(res.cells.end(), extra.begin(), extra.end());
      res.notes = monotone_repair(res.cells);
    }
  }

  std::stable_sort(res.cells.begin(), res.cells.end(), [](const auto& a, const auto& b) {
    return a.nu != b.nu ? a.nu < b.nu : a.eps < b.eps;
  });
  res.per_nu = summarize(res.cells, cfg.nu_grid);
  std::vector<double> nus, stars;
  for (const auto& s : res.per_nu) {
    if (s.censored != "none") continue;
    nus.push_back(s.nu);
    stars.push_back(s.eps_star);
  }
  res.fit = fit_gamma(nus, stars);
  return res;
}

}  // namespace rotcouette

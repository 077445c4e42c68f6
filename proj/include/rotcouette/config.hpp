#pragma once

// INI experiment configuration.
//
//   [sim]       nu beta dt t_end eps seed ic_kind ic_file sigma nonlinear
//               bootstrap integrator diag_cadence snapshot_cadence blowup_cap
//               mode_k mode_eta mode_l C0 C1 window_constant resolution_fraction
//   [grid]      nx ny nz ly
//   [sweep]     nu_grid (comma separated) eps_min eps_max eps_points
//               eps_nu_power bisect bisect_rel_width threads
//   [classify]  horizon growth_factor norm
//
// Every key is optional; unknown sections or keys are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "threshold_harness.hpp"

namespace rotcouette {

struct ExperimentConfig {
  SimConfig sim;
  SweepConfig sweep;
};

inline std::string_view to_string(IcKind k) {
  switch (k) {
    case IcKind::single_mode: return "single_mode";
    case IcKind::random_band: return "random_band";
    default: return "file";
  }
}

inline IcKind ic_kind_from_string(const std::string& s) {
  if (s == "single_mode") return IcKind::single_mode;
  if (s == "random_band") return IcKind::random_band;
  if (s == "file") return IcKind::file;
  throw std::invalid_argument("unknown ic_kind: " + s);
}

inline std::string_view to_string(Integrator i) {
  return i == Integrator::rk4 ? "rk4" : "midpoint";
}

inline Integrator integrator_from_string(const std::string& s) {
  if (s == "rk4") return Integrator::rk4;
  if (s == "midpoint") return Integrator::midpoint;
  throw std::invalid_argument("unknown integrator: " + s);
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t used = 0;
    const std::string trimmed = item.substr(b);
    out.push_back(std::stod(trimmed, &used));
    if (trimmed.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("bad number in list: " + item);
  }
  return out;
}

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got: " + v);
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  SimConfig& s = c.sim;
  SweepConfig& w = c.sweep;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw std::invalid_argument("config: key outside a section: " + section);
    for (const auto& [key, node] : body) {
      const std::string v = node.get_value<std::string>();
      const std::string where = section + "." + key;
      auto num = [&] {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("config: bad number for " + where);
        return x;
      };
      auto integer = [&] {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("config: bad integer for " + where);
        return x;
      };
      try {
        if (section == "sim") {
          if (key == "nu") s.nu = num();
          else if (key == "beta") s.beta = num();
          else if (key == "dt") s.dt = num();
          else if (key == "t_end") s.t_end = num();
          else if (key == "eps") s.eps = num();
          else if (key == "seed") s.seed = std::uint64_t(integer());
          else if (key == "ic_kind") s.ic_kind = ic_kind_from_string(v);
          else if (key == "ic_file") s.ic_file = v;
          else if (key == "sigma") s.sigma = num();
          else if (key == "nonlinear") s.nonlinear_enabled = detail::parse_bool(v);
          else if (key == "bootstrap") s.bootstrap_diagnostics = detail::parse_bool(v);
          else if (key == "integrator") s.integrator = integrator_from_string(v);
          else if (key == "diag_cadence") s.diag_cadence = int(integer());
          else if (key == "snapshot_cadence") s.snapshot_cadence = int(integer());
          else if (key == "blowup_cap") s.blowup_cap = num();
          else if (key == "mode_k") s.mode_k = int(integer());
          else if (key == "mode_eta") s.mode_eta = num();
          else if (key == "mode_l") s.mode_l = int(integer());
          else if (key == "C0") s.C0 = num();
          else if (key == "C1") s.C1 = num();
          else if (key == "window_constant") s.window_constant = num();
          else if (key == "resolution_fraction") s.resolution_fraction = num();
          else throw std::invalid_argument("config: unknown key " + where);
        } else if (section == "grid") {
          if (key == "nx") s.grid.nx = int(integer());
          else if (key == "ny") s.grid.ny = int(integer());
          else if (key == "nz") s.grid.nz = int(integer());
          else if (key == "ly") s.grid.ly = num();
          else throw std::invalid_argument("config: unknown key " + where);
        } else if (section == "sweep") {
          if (key == "nu_grid") w.nu_grid = parse_double_list(v);
          else if (key == "eps_min") w.eps_grid.min = num();
          else if (key == "eps_max") w.eps_grid.max = num();
          else if (key == "eps_points") w.eps_grid.points = int(integer());
          else if (key == "eps_nu_power") w.eps_grid.nu_power = num();
          else if (key == "bisect") w.bisect = detail::parse_bool(v);
          else if (key == "bisect_rel_width") w.bisect_rel_width = num();
          else if (key == "threads") w.threads = int(integer());
          else throw std::invalid_argument("config: unknown key " + where);
        } else if (section == "classify") {
          if (key == "horizon") w.classify.horizon = num();
          else if (key == "growth_factor") w.classify.growth_factor = num();
          else if (key == "norm") w.classify.norm_name = v;
          else throw std::invalid_argument("config: unknown key " + where);
        } else {
          throw std::invalid_argument("config: unknown section [" + section + "]");
        }
      } catch (const std::invalid_argument& e) {
        if (std::string_view(e.what()).rfind("config:", 0) == 0) throw;
        throw std::invalid_argument("config: bad value for " + where + ": " + e.what());
      } catch (const std::out_of_range&) {
        throw std::invalid_argument("config: value out of range for " + where);
      }
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  return parse_config(is);
}

/// Canonical INI text of the effective configuration; parse_config of the
/// result gives back the same values.
inline std::string format_config(const ExperimentConfig& c) {
  const SimConfig& s = c.sim;
  const SweepConfig& w = c.sweep;
  std::string out;
  out += "[sim]\n";
  out += fmt::format("nu = {:.17g}\nbeta = {:.17g}\ndt = {:.17g}\nt_end = {:.17g}\n", s.nu,
                     s.beta, s.dt, s.t_end);
  out += fmt::format("eps = {:.17g}\nseed = {}\nic_kind = {}\n", s.eps, s.seed,
                     to_string(s.ic_kind));
  if (!s.ic_file.empty()) out += fmt::format("ic_file = {}\n", s.ic_file);
  out += fmt::format("sigma = {:.17g}\nnonlinear = {}\nbootstrap = {}\nintegrator = {}\n",
                     s.sigma, s.nonlinear_enabled, s.bootstrap_diagnostics,
                     to_string(s.integrator));
  out += fmt::format("diag_cadence = {}\nsnapshot_cadence = {}\nblowup_cap = {:.17g}\n",
                     s.diag_cadence, s.snapshot_cadence, s.blowup_cap);
  out += fmt::format("mode_k = {}\nmode_eta = {:.17g}\nmode_l = {}\n", s.mode_k, s.mode_eta,
                     s.mode_l);
  out += fmt::format("C0 = {:.17g}\nC1 = {:.17g}\nwindow_constant = {:.17g}\n", s.C0, s.C1,
                     s.window_constant);
  out += fmt::format("resolution_fraction = {:.17g}\n", s.resolution_fraction);
  out += "\n[grid]\n";
  out += fmt::format("nx = {}\nny = {}\nnz = {}\nly = {:.17g}\n", s.grid.nx, s.grid.ny,
                     s.grid.nz, s.grid.ly);
  out += "\n[sweep]\n";
  std::string nus;
  for (std::size_t i = 0; i < w.nu_grid.size(); ++i)
    nus += fmt::format("{}{:.17g}", i ? ", " : "", w.nu_grid[i]);
  if (!nus.empty()) out += "nu_grid = " + nus + "\n";
  out += fmt::format("eps_min = {:.17g}\neps_max = {:.17g}\neps_points = {}\n",
                     w.eps_grid.min, w.eps_grid.max, w.eps_grid.points);
  out += fmt::format("eps_nu_power = {:.17g}\nbisect = {}\nbisect_rel_width = {:.17g}\n",
                     w.eps_grid.nu_power, w.bisect, w.bisect_rel_width);
  out += fmt::format("threads = {}\n", w.threads);
  out += "\n[classify]\n";
  out += fmt::format("horizon = {:.17g}\ngrowth_factor = {:.17g}\nnorm = {}\n",
                     w.classify.horizon, w.classify.growth_factor, w.classify.norm_name);
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rotcouette

#pragma once

// Plain-text spectral snapshots.
//
//   # rotcouette spectral snapshot v1
//   # nx=16 ny=64 nz=16 ly=32 t=0 nu=0.01
//   k,j,l,eta,re_u1,im_u1,re_u2,im_u2,re_u3,im_u3
//   ...one row per retained mode with a non-zero coefficient...
//
// Values are printed with 17 significant digits, so a write/read round trip
// is exact.

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "velocity_field.hpp"

namespace rotcouette {

inline constexpr const char* kSnapshotMagic = "# rotcouette spectral snapshot v1";

inline void write_snapshot(std::ostream& os, const VelocityField& U, double nu) {
  const GridSpec& g = U.grid();
  os << kSnapshotMagic << '\n';
  os << fmt::format("# nx={} ny={} nz={} ly={:.17g} t={:.17g} nu={:.17g}\n", g.nx, g.ny,
                    g.nz, g.ly, U.time(), nu);
  os << "k,j,l,eta,re_u1,im_u1,re_u2,im_u2,re_u3,im_u3\n";
  U.u[0].for_each_mode([&](std::size_t n, int k, int jy, int l) {
    if (!g.retained(k, jy, l)) return;
    const complex a = U.u[0][n], b = U.u[1][n], c = U.u[2][n];
    if (a == complex{} && b == complex{} && c == complex{}) return;
    os << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                      k, jy, l, g.eta_of(jy), a.real(), a.imag(), b.real(), b.imag(),
                      c.real(), c.imag());
  });
}

inline void write_snapshot(const std::string& path, const VelocityField& U, double nu) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_snapshot: cannot open " + path);
  write_snapshot(os, U, nu);
  if (!os) throw std::runtime_error("write_snapshot: write failed for " + path);
}

struct Snapshot {
  VelocityField field;
  double nu = 0.0;
};

inline Snapshot read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSnapshotMagic)
    throw std::runtime_error("read_snapshot: missing snapshot header");
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("read_snapshot: missing grid line");
  GridSpec g;
  double t = 0.0, nu = 0.0;
  {
    std::istringstream ss(line.substr(2));
    std::string tok;
    int seen = 0;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("read_snapshot: bad token " + tok);
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "nx") g.nx = std::stoi(val);
      else if (key == "ny") g.ny = std::stoi(val);
      else if (key == "nz") g.nz = std::stoi(val);
      else if (key == "ly") g.ly = std::stod(val);
      else if (key == "t") t = std::stod(val);
      else if (key == "nu") nu = std::stod(val);
      else throw std::runtime_error("read_snapshot: unknown key " + key);
      ++seen;
    }
    if (seen != 6) throw std::runtime_error("read_snapshot: incomplete grid line");
  }
  g.validate();
  if (!std::getline(is, line)) throw std::runtime_error("read_snapshot: missing column line");

  Snapshot s{VelocityField(g, t), nu};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[10];
    for (int i = 0; i < 10; ++i)
      if (!std::getline(ss, f[i], ','))
        throw std::runtime_error("read_snapshot: short row: " + line);
    const int k = std::stoi(f[0]), jy = std::stoi(f[1]), l = std::stoi(f[2]);
    if (std::abs(k) >= g.nx / 2 || std::abs(jy) >= g.ny / 2 || std::abs(l) >= g.nz / 2)
      throw std::runtime_error("read_snapshot: mode outside grid: " + line);
    for (int c = 0; c < 3; ++c)
      s.field.u[c].at(k, jy, l) = complex(std::stod(f[4 + 2 * c]), std::stod(f[5 + 2 * c]));
  }
  return s;
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_snapshot: cannot open " + path);
  return read_snapshot(is);
}

}  // namespace rotcouette

#pragma once

// Frequency grids, moving-frame symbols, zero/non-zero projections and
// Sobolev norms for fields on T x R x T, with R replaced by a periodic
// interval of length ly.
//
// Coefficients are Fourier-series amplitudes in the moving frame
// X = x - t y, Y = y, Z = z:
//
//   f(X, Y, Z) = sum_{k, j, l} c(k, j, l) exp(i (k X + eta_j Y + l Z)),
//   eta_j = 2 pi j / ly,
//
// so the derivative symbols of grad_L at time t are i (k, eta - k t, l).

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotcouette {

using complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Japanese bracket <x> = sqrt(1 + x^2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

/// One Fourier mode label (k, eta, l). Stored as given.
struct WaveVector {
  int k = 0;
  double eta = 0.0;
  int l = 0;

  double magnitude() const {
    return std::sqrt(double(k) * k + eta * eta + double(l) * l);
  }
  /// |k, l|
  double horizontal() const { return std::sqrt(double(k) * k + double(l) * l); }

  friend bool operator==(const WaveVector&, const WaveVector&) = default;
};

/// Symbol of -Delta_L: k^2 + (eta - k t)^2 + l^2.
inline double w_symbol(double t, const WaveVector& kv) {
  const double xi = kv.eta - kv.k * t;
  return double(kv.k) * kv.k + xi * xi + double(kv.l) * kv.l;
}

/// d/dt of w_symbol: -2 k (eta - k t).
inline double w_dot_symbol(double t, const WaveVector& kv) {
  return -2.0 * kv.k * (kv.eta - kv.k * t);
}

/// Exact value of int_0^t w(tau) dtau.
inline double integral_w(double t, const WaveVector& kv) {
  if (t < 0.0) throw std::invalid_argument("integral_w: t must be >= 0");
  const double k = kv.k;
  const double l = kv.l;
  const double c = kv.eta - 0.5 * k * t;
  return (k * k + l * l) * t + (c * c + k * k * t * t / 12.0) * t;
}

/// int_{t0}^{t1} w(tau) dtau. w is quadratic in tau, so Simpson's rule is
/// exact; this form avoids cancellation between two large primitives.
inline double integral_w_between(double t0, double t1, const WaveVector& kv) {
  const double tm = 0.5 * (t0 + t1);
  return (t1 - t0) / 6.0 *
         (w_symbol(t0, kv) + 4.0 * w_symbol(tm, kv) + w_symbol(t1, kv));
}

/// |k, eta - k t, l|
inline double nabla_L_magnitude(double t, const WaveVector& kv) {
  return std::sqrt(w_symbol(t, kv));
}

/// Discretization of T x [0, ly) x T in the moving frame.
struct GridSpec {
  int nx = 16;
  int ny = 64;
  int nz = 16;
  double ly = 32.0;

  void validate() const {
    auto check = [](int n, const char* name) {
      if (n <= 0 || n % 2 != 0)
        throw std::invalid_argument(std::string("GridSpec: ") + name +
                                    " must be a positive even integer");
    };
    check(nx, "nx");
    check(ny, "ny");
    check(nz, "nz");
    if (!(ly > 0.0)) throw std::invalid_argument("GridSpec: ly must be > 0");
  }

  std::size_t size() const { return std::size_t(nx) * ny * nz; }

  /// Signed wavenumber of FFT-order index i on an axis with n points.
  static int wavenumber(int i, int n) { return i < n / 2 ? i : i - n; }
  /// FFT-order index of signed wavenumber q (|q| < n/2, or q = -n/2).
  static int index_of(int q, int n) { return q >= 0 ? q : q + n; }

  /// Largest retained |wavenumber| under the 2/3 rule: floor(2n/3) modes,
  /// symmetric about zero.
  static int dealias_max(int n) { return (2 * n / 3) / 2; }

  double eta_of(int j) const { return 2.0 * pi * j / ly; }
  double eta_nyquist() const { return pi * ny / ly; }
  /// Largest |eta| kept by dealiasing.
  double eta_cutoff() const { return eta_of(dealias_max(ny)); }

  /// Weight of one coefficient in L^2 sums (see decisions in README).
  double cell_measure() const { return ly; }

  std::size_t flat(int i, int j, int m) const {
    return (std::size_t(i) * ny + j) * nz + m;
  }

  bool retained(int k, int jy, int l) const {
    return std::abs(k) <= dealias_max(nx) && std::abs(jy) <= dealias_max(ny) &&
           std::abs(l) <= dealias_max(nz);
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Complex spectral coefficients on a GridSpec at a given time, in FFT order
/// with z fastest.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const GridSpec& grid, double time = 0.0)
      : grid_(grid), time_(time), coeffs_(grid.size(), complex{}) {
    grid_.validate();
  }

  const GridSpec& grid() const { return grid_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::span<complex> coeffs() { return coeffs_; }
  std::span<const complex> coeffs() const { return coeffs_; }

  complex& operator[](std::size_t n) { return coeffs_[n]; }
  const complex& operator[](std::size_t n) const { return coeffs_[n]; }

  /// Access by signed wavenumbers (k, j, l), eta = 2 pi j / ly.
  complex& at(int k, int jy, int l) {
    return coeffs_[grid_.flat(GridSpec::index_of(k, grid_.nx),
                              GridSpec::index_of(jy, grid_.ny),
                              GridSpec::index_of(l, grid_.nz))];
  }
  const complex& at(int k, int jy, int l) const {
    return const_cast<SpectralField&>(*this).at(k, jy, l);
  }

  WaveVector wave_vector(int i, int j, int m) const {
    return {GridSpec::wavenumber(i, grid_.nx),
            grid_.eta_of(GridSpec::wavenumber(j, grid_.ny)),
            GridSpec::wavenumber(m, grid_.nz)};
  }

  void set_zero() { std::fill(coeffs_.begin(), coeffs_.end(), complex{}); }

  SpectralField& operator+=(const SpectralField& o) {
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] += o.coeffs_[n];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] -= o.coeffs_[n];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  /// Calls fn(flat_index, k, jy, l) for every coefficient.
  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    for (int i = 0; i < grid_.nx; ++i) {
      const int k = GridSpec::wavenumber(i, grid_.nx);
      for (int j = 0; j < grid_.ny; ++j) {
        const int jy = GridSpec::wavenumber(j, grid_.ny);
        for (int m = 0; m < grid_.nz; ++m)
          fn(grid_.flat(i, j, m), k, jy, GridSpec::wavenumber(m, grid_.nz));
      }
    }
  }

 private:
  GridSpec grid_{};
  double time_ = 0.0;
  std::vector<complex> coeffs_;
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) {
  return a += b;
}
inline SpectralField operator-(SpectralField a, const SpectralField& b) {
  return a -= b;
}

/// Keeps only k = 0 coefficients (x-average).
inline SpectralField project_zero(const SpectralField& f) {
  SpectralField out(f.grid(), f.time());
  f.for_each_mode([&](std::size_t n, int k, int, int) {
    if (k == 0) out[n] = f[n];
  });
  return out;
}

/// Keeps only k != 0 coefficients.
inline SpectralField project_nonzero(const SpectralField& f) {
  SpectralField out(f.grid(), f.time());
  f.for_each_mode([&](std::size_t n, int k, int, int) {
    if (k != 0) out[n] = f[n];
  });
  return out;
}

/// Zeroes every coefficient outside the 2/3 band.
inline void dealias(SpectralField& f) {
  const GridSpec& g = f.grid();
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    if (!g.retained(k, jy, l)) f[n] = complex{};
  });
}

/// ||f||_{H^s} = sqrt(sum <k,eta,l>^{2s} |c|^2 * cell_measure).
inline double sobolev_norm(const SpectralField& f, double s) {
  if (s < 0.0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
  const GridSpec& g = f.grid();
  double sum = 0.0;
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    const double a2 = std::norm(f[n]);
    if (a2 == 0.0) return;
    const double eta = g.eta_of(jy);
    const double weight = 1.0 + double(k) * k + eta * eta + double(l) * l;
    sum += std::pow(weight, s) * a2;
  });
  return std::sqrt(sum * g.cell_measure());
}

/// L^2 inner product <f, g> = sum conj(f) g * cell_measure.
inline complex inner_product(const SpectralField& f, const SpectralField& g) {
  complex sum{};
  for (std::size_t n = 0; n < f.coeffs().size(); ++n)
    sum += std::conj(f[n]) * g[n];
  return sum * f.grid().cell_measure();
}

/// max |c(-k,-j,-l) - conj c(k,j,l)| over pairs that both live on the grid.
/// Nyquist planes have no partner and are skipped.
inline double hermitian_defect(const SpectralField& f) {
  const GridSpec& g = f.grid();
  double worst = 0.0;
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    if (k == -g.nx / 2 || jy == -g.ny / 2 || l == -g.nz / 2) return;
    worst = std::max(worst, std::abs(f.at(-k, -jy, -l) - std::conj(f[n])));
  });
  return worst;
}

/// Replaces f by (f(k) + conj f(-k)) / 2 and clears Nyquist planes.
inline void enforce_hermitian(SpectralField& f) {
  const GridSpec& g = f.grid();
  SpectralField copy = f;
  f.for_each_mode([&](std::size_t n, int k, int jy, int l) {
    if (k == -g.nx / 2 || jy == -g.ny / 2 || l == -g.nz / 2) {
      f[n] = complex{};
      return;
    }
    f[n] = 0.5 * (copy[n] + std::conj(copy.at(-k, -jy, -l)));
  });
}

inline double max_abs(const SpectralField& f) {
  double m = 0.0;
  for (const auto& c : f.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

/// Fraction of L^2 energy with |eta| >= frac * (largest retained |eta|).
inline double high_eta_energy_fraction(const SpectralField& f, double frac = 0.9) {
  const GridSpec& g = f.grid();
  const double edge = frac * g.eta_cutoff();
  double hi = 0.0, total = 0.0;
  f.for_each_mode([&](std::size_t n, int, int jy, int) {
    const double a2 = std::norm(f[n]);
    total += a2;
    if (std::abs(g.eta_of(jy)) >= edge) hi += a2;
  });
  return total > 0.0 ? hi / total : 0.0;
}

}  // namespace rotcouette

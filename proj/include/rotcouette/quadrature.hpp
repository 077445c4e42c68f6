#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "errors.hpp"

namespace rotcouette {

namespace detail {

template <class Fn, class T>
T simpson_recurse(const Fn& f, double a, double b, T fa, T fm, T fb, T whole,
                  double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const T flm = f(lm);
  const T frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0)
    throw NumericalError("adaptive_simpson: no convergence on [" +
                         std::to_string(a) + ", " + std::to_string(b) + "]");
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] with absolute tolerance tol.
/// The interval is first cut into `panels` equal pieces so that narrow
/// features are not stepped over. Throws NumericalError when the recursion
/// depth is exhausted.
template <class Fn>
auto adaptive_simpson(const Fn& f, double a, double b, double tol, int panels = 1,
                      int max_depth = 48) -> decltype(f(a)) {
  using T = decltype(f(a));
  if (b == a) return T{};
  if (panels < 1) panels = 1;
  const double h = (b - a) / panels;
  const double panel_tol = tol / panels;
  T total{};
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double hi = (p + 1 == panels) ? b : lo + h;
    const double mid = 0.5 * (lo + hi);
    const T flo = f(lo), fmid = f(mid), fhi = f(hi);
    const T whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += detail::simpson_recurse(f, lo, hi, flo, fmid, fhi, whole, panel_tol,
                                     max_depth);
  }
  return total;
}

}  // namespace rotcouette

#pragma once

#include <cmath>
#include <stdexcept>

namespace gsmix {

namespace detail {

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on [a, b]; tol is an absolute tolerance on the result.
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-12, int max_depth = 60) {
  if (!(a <= b)) throw std::invalid_argument("integrate: a > b");
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// 15-point Gauss-Legendre on [a, b]; used for the per-cell pieces of
// cumulative integrals where the integrand is smooth.
template <typename F>
double gauss15(const F& f, double a, double b) {
  static const double xs[8] = {0.0000000000000000, 0.2011940939974345, 0.3941513470775634,
                               0.5709721726085388, 0.7244177313601701, 0.8482065834104272,
                               0.9372733924007060, 0.9879925180204854};
  static const double ws[8] = {0.2025782419255613, 0.1984314853271116, 0.1861610000155622,
                               0.1662692058169939, 0.1395706779261543, 0.1071592204671719,
                               0.0703660474881081, 0.0307532419961173};
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = ws[0] * f(c);
  for (int i = 1; i < 8; ++i)
    s += ws[i] * (f(c - h * xs[i]) + f(c + h * xs[i]));
  return s * h;
}

}  // namespace gsmix

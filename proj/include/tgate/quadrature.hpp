#pragma once

#include <cmath>
#include <limits>

#include "tgate/error.hpp"

namespace tgate {

struct QuadratureOptions {
  double relative_tolerance = 1e-10;
  int max_depth = 60;
  int min_depth = 4;
};

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double eps, int depth, const QuadratureOptions& opt) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Past the rounding floor further splitting only adds noise.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (depth >= opt.max_depth ||
      (depth >= opt.min_depth && std::abs(delta) <= std::max(15.0 * eps, floor))) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth + 1, opt) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth + 1, opt);
}

}  // namespace detail

/// Adaptive Simpson integration of f over a finite interval [a, b].
///
/// The absolute error budget is relative_tolerance times a coarse estimate of
/// the integral magnitude (a 64-panel composite Simpson sum), so the requested
/// tolerance is relative to the result.
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  require(std::isfinite(a) && std::isfinite(b), "quadrature requires finite window");
  if (b == a) return 0.0;
  if (b < a) return -integrate(f, b, a, opt);

  constexpr int panels = 64;
  const double h = (b - a) / panels;
  double scale = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + i * h;
    scale += h / 6.0 * (std::abs(f(x0)) + 4.0 * std::abs(f(x0 + 0.5 * h)) + std::abs(f(x0 + h)));
  }
  const double eps =
      std::max(opt.relative_tolerance * scale, std::numeric_limits<double>::min());

  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, eps, 0, opt);
}

}  // namespace tgate

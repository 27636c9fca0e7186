#pragma once

#include <cmath>
#include <numbers>

namespace tgate {

/// Scaled complementary error function exp(x^2) * erfc(x).
///
/// Below x = 25 the product is formed directly; erfc keeps full relative
/// accuracy there and exp(x^2) does not overflow. Above it a Lentz-evaluated
/// continued fraction is used, which converges in a handful of terms.
template <typename Scalar>
Scalar erfcx(Scalar x) {
  using std::erfc;
  using std::exp;
  if (x < Scalar(25)) return exp(x * x) * erfc(x);

  // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  const Scalar tiny = Scalar(1e-300);
  Scalar f = x;
  Scalar c = x;
  Scalar d = 0;
  for (int k = 1; k < 200; ++k) {
    const Scalar a = Scalar(k) / Scalar(2);
    d = x + a * d;
    if (d == 0) d = tiny;
    c = x + a / c;
    if (c == 0) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = c * d;
    f *= delta;
    if (std::abs(delta - Scalar(1)) < Scalar(1e-16)) break;
  }
  return Scalar(1) / (std::sqrt(std::numbers::pi_v<Scalar>) * f);
}

/// One exponential decay (amplitude, lifetime) convolved with a zero-mean
/// Gaussian of width sigma, evaluated at time u after the pulse.
///
/// sigma == 0 gives the bare one-sided exponential. When the exponent of the
/// direct form exceeds 700 the equivalent erfcx form is used instead, which
/// never overflows.
template <typename Scalar>
Scalar emg(Scalar amplitude, Scalar lifetime, Scalar sigma, Scalar u) {
  using std::exp;
  if (sigma <= Scalar(0)) return u < Scalar(0) ? Scalar(0) : amplitude * exp(-u / lifetime);

  const Scalar sqrt2 = std::numbers::sqrt2_v<Scalar>;
  const Scalar z = sigma / (sqrt2 * lifetime) - u / (sqrt2 * sigma);
  const Scalar exponent = sigma * sigma / (Scalar(2) * lifetime * lifetime) - u / lifetime;
  if (exponent <= Scalar(700)) return amplitude / Scalar(2) * exp(exponent) * std::erfc(z);
  return amplitude / Scalar(2) * exp(-u * u / (Scalar(2) * sigma * sigma)) * erfcx(z);
}

/// Integral of amplitude*exp(-t/lifetime) over [t0, t1]; t1 may be +inf.
/// Written as a*tau*e^{-t0/tau}*(1 - e^{-(t1-t0)/tau}) so short windows do not
/// lose digits to cancellation.
template <typename Scalar>
Scalar exponential_integral(Scalar amplitude, Scalar lifetime, Scalar t0, Scalar t1) {
  if (!(t1 > t0)) return Scalar(0);
  const Scalar head = amplitude * lifetime * std::exp(-t0 / lifetime);
  if (std::isinf(t1)) return head;
  return head * -std::expm1(-(t1 - t0) / lifetime);
}

}  // namespace tgate

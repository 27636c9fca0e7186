#include "tgate/metrics.hpp"

#include <cmath>
#include <numbers>

#include "tgate/error.hpp"

namespace tgate {

namespace {

void check_counts(const CountPair& p) {
  require(std::isfinite(p.n0) && std::isfinite(p.n1) && p.n0 >= 0.0 && p.n1 >= 0.0,
          "counts must be finite and >= 0");
}

}  // namespace

void PhysicalConstants::validate() const {
  require(planck_h > 0.0 && electron_g > 0.0 && bohr_magneton > 0.0,
          "physical constants must be positive");
}

double contrast(const CountPair& p) {
  check_counts(p);
  require(p.n0 > 0.0, "undefined contrast: n0 = 0");
  return (p.n0 - p.n1) / p.n0;
}

double snr(const CountPair& p) {
  check_counts(p);
  require(p.n0 + p.n1 > 0.0, "undefined snr: n0 + n1 = 0");
  return (p.n0 - p.n1) / std::sqrt(p.n0 + p.n1);
}

double ef_theoretical(double contrast, double bg_ratio) {
  require(contrast >= 0.0 && contrast < 1.0, "contrast must lie in [0, 1)");
  require(std::isfinite(bg_ratio) && bg_ratio >= 0.0, "background ratio must be >= 0");
  return std::sqrt(1.0 + 2.0 / (2.0 - contrast) * bg_ratio);
}

double speedup(double ef) {
  require(ef > 0.0, "enhancement factor must be > 0");
  return ef * ef;
}

double sensitivity_cw(double linewidth, const RatePair& rates, const PhysicalConstants& constants) {
  constants.validate();
  require(linewidth > 0.0 && std::isfinite(linewidth), "linewidth must be > 0");
  require(rates.r1 > 0.0, "rates must be > 0");
  require(rates.r0 > rates.r1, "non-positive ODMR dip");
  const double prefactor = 4.0 / (3.0 * std::sqrt(3.0));
  const double field_per_hz =
      constants.planck_h / (constants.electron_g * constants.bohr_magneton);
  return prefactor * field_per_hz * linewidth * std::sqrt(rates.r0) / (rates.r0 - rates.r1);
}

double ef_empirical(const CountPair& gated, const CountPair& ungated) {
  const double base = snr(ungated);
  require(base > 0.0, "ungated SNR must be > 0");
  return snr(gated) / base;
}

}  // namespace tgate

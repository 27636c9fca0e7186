#pragma once

namespace tgate {

/// Detected counts in the two readout channels: n0 with the spin in m_S=0
/// (MW off), n1 with the MW drive on.
struct CountPair {
  double n0 = 0.0;
  double n1 = 0.0;
};

/// Detected rates (counts/s) of the two channels, background included.
struct RatePair {
  double r0 = 0.0;
  double r1 = 0.0;
};

/// CODATA 2018 defaults.
struct PhysicalConstants {
  double planck_h = 6.62607015e-34;       // J s
  double electron_g = 2.00231930436256;   // |g_e|
  double bohr_magneton = 9.2740100783e-24;  // J/T

  void validate() const;
};

/// (n0 - n1) / n0. Negative when n1 > n0.
double contrast(const CountPair& p);

/// Shot-noise-limited spin readout SNR, (n0 - n1) / sqrt(n0 + n1).
double snr(const CountPair& p);

/// Upper bound on the SNR gain from removing all background:
/// sqrt(1 + 2/(2 - C) * n_bg/n0).
double ef_theoretical(double contrast, double bg_ratio);

/// Measurement-time reduction for a given SNR enhancement (ef^2).
double speedup(double ef);

/// Shot-noise-limited CW-ODMR sensitivity in T/sqrt(Hz).
double sensitivity_cw(double linewidth, const RatePair& rates,
                      const PhysicalConstants& constants = {});

/// SNR of the gated counts relative to the ungated ones.
double ef_empirical(const CountPair& gated, const CountPair& ungated);

}  // namespace tgate

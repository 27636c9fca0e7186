#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "tgate/decay_model.hpp"
#include "tgate/error.hpp"
#include "tgate/histogram.hpp"
#include "tgate/metrics.hpp"

namespace tgate {

struct OdmrSpectrum {
  Eigen::VectorXd freqs;   // Hz, strictly increasing
  Eigen::VectorXd counts;  // detected counts per frequency point
  double integration_per_point = 0.0;  // s
  std::optional<GateWindow> gate;

  void validate() const;
};

struct LorentzianDip {
  double center = 0.0;  // Hz
  double fwhm = 0.0;    // Hz
  double depth = 0.0;   // fraction of the baseline at the center
};

/// baseline * (1 - sum_k depth_k * L_k(f)), with L_k a unit-height Lorentzian.
struct LorentzianDoublet {
  double baseline = 0.0;
  std::array<LorentzianDip, 2> dips{};

  /// Fractional dip sum_k depth_k * L_k(f).
  double dip_fraction(double f) const;
  double operator()(double f) const { return baseline * (1.0 - dip_fraction(f)); }
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& freqs) const;

  /// Dip with the larger depth; ties go to the lower center frequency.
  const LorentzianDip& deeper() const;
};

/// Truth for synthetic spectra: per dip, the m_S=±1 population fraction
/// reached at exact resonance is `depth`.
using DoubletTruth = std::array<LorentzianDip, 2>;

/// CW-ODMR spectrum: at frequency f the NV population is mixed with
/// p(f) = sum_k depth_k L_k(f) and counts are the gated rate of that mixture
/// times the dwell per point. Poisson-sampled when a seed is given.
OdmrSpectrum synth_odmr(const FluorescenceModel& model, const PulseTrain& train,
                        const GateWindow& gate, const Eigen::Ref<const Eigen::VectorXd>& freqs,
                        const DoubletTruth& truth, double integration_per_point,
                        std::optional<std::uint64_t> seed = std::nullopt);

struct FitOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
};

struct DoubletFit {
  LorentzianDoublet params;
  double residual_norm = 0.0;
  int iterations = 0;
};

class FitError : public NumericError {
 public:
  FitError(const std::string& what, LorentzianDoublet last_iterate)
      : NumericError(what), last_iterate_(last_iterate) {}
  const LorentzianDoublet& last_iterate() const { return last_iterate_; }

 private:
  LorentzianDoublet last_iterate_;
};

/// Starting point for the fit, derived from the spectrum shape alone.
LorentzianDoublet initial_guess(const OdmrSpectrum& spectrum);

/// Least-squares double-Lorentzian fit; dips are returned in ascending center
/// order with positive widths.
DoubletFit fit_double_lorentzian(const OdmrSpectrum& spectrum, const FitOptions& opt = {});

/// Builds a spectrum from one TCSPC histogram per frequency by summing the
/// bins inside `gate`.
OdmrSpectrum gate_measured_odmr(std::span<const CountHistogram> histograms,
                                std::span<const double> freqs, const GateWindow& gate);

/// CW sensitivity from a fitted doublet: linewidth is the deeper dip's FWHM.
double sensitivity_from_fit(const LorentzianDoublet& doublet, const RatePair& rates,
                            const PhysicalConstants& constants = {});

}  // namespace tgate

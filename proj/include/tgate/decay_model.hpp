#pragma once

#include <limits>
#include <string>
#include <vector>

#include "tgate/histogram.hpp"

namespace tgate {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// One exponential emitter. Amplitude is counts/ns at pulse onset for a single
/// excitation cycle, so amplitude*lifetime is the photon yield per pulse.
struct DecayComponent {
  double amplitude = 0.0;
  double lifetime = 1.0;  // ns
  std::string label;

  void validate() const;
};

enum class Spin { ms0, ms1 };

/// Fraction of the NV population emitting from the m_S=±1 decay curve.
/// Spin::ms0 and Spin::ms1 are the pure states; the MW-on channel of a CW-ODMR
/// measurement is a mixture.
class SpinState {
 public:
  constexpr SpinState(Spin spin) : ms1_fraction_(spin == Spin::ms1 ? 1.0 : 0.0) {}  // NOLINT
  static SpinState mixed(double ms1_fraction);

  constexpr double ms1_fraction() const { return ms1_fraction_; }
  constexpr double ms0_fraction() const { return 1.0 - ms1_fraction_; }

 private:
  constexpr explicit SpinState(double f) : ms1_fraction_(f) {}
  double ms1_fraction_;
};

struct FluorescenceModel {
  std::vector<DecayComponent> spin0;
  std::vector<DecayComponent> spin1;
  std::vector<DecayComponent> background;
  double dark_rate = 0.0;   // counts/ns
  double irf_sigma = 0.0;   // ns, Gaussian IRF width
  double pulse_time = 0.0;  // ns, excitation instant within the period

  void validate() const;
};

/// Gate [t_start, t_end) in ns after the period start. t_end may be kUnbounded.
class GateWindow {
 public:
  explicit GateWindow(double t_start, double t_end = kUnbounded);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  bool bounded() const { return t_end_ != kUnbounded; }
  double length() const { return t_end_ - t_start_; }

 private:
  double t_start_;
  double t_end_;
};

/// Pulse-to-pulse tail handling. `truncated` ignores decay tails that run
/// into the next period; `folded` scales each amplitude by 1/(1-e^{-T/tau}).
enum class TailMode { truncated, folded };

class PulseTrain {
 public:
  explicit PulseTrain(double rep_rate, TailMode tail = TailMode::truncated);

  double rep_rate() const { return rep_rate_; }  // Hz
  double period() const { return 1e9 / rep_rate_; }  // ns
  TailMode tail() const { return tail_; }

 private:
  double rep_rate_;
  TailMode tail_;
};

/// Counts (or rates) split into the spin-dependent NV part, the background
/// emitters, and the constant dark contribution.
struct GatedCounts {
  double signal = 0.0;
  double background = 0.0;
  double dark = 0.0;

  double total() const { return signal + background + dark; }
};

inline GatedCounts operator*(GatedCounts c, double k) {
  return {c.signal * k, c.background * k, c.dark * k};
}
inline GatedCounts operator*(double k, GatedCounts c) { return c * k; }

/// Expected detection intensity (counts/ns per excitation) at time t:
/// IRF-convolved exponentials of the selected spin state and background,
/// plus the dark rate.
double expected_intensity(const FluorescenceModel& model, SpinState spin, double t);

/// Closed-form photons per pulse of one pure exponential inside `gate`.
double gated_counts_exponential(const DecayComponent& comp, const GateWindow& gate);

/// Photons per pulse inside `gate`. Closed form when irf_sigma == 0, adaptive
/// quadrature otherwise (which needs a finite gate).
GatedCounts gated_counts(const FluorescenceModel& model, SpinState spin, const GateWindow& gate);

/// Same, evaluated under a pulse train: applies the tail mode and requires the
/// gate to end within the period.
GatedCounts gated_counts(const FluorescenceModel& model, SpinState spin, const GateWindow& gate,
                         const PulseTrain& train);

/// Detected rate in counts/s for the gate [t_start, t_end] under `train`.
GatedCounts gated_rate(const FluorescenceModel& model, SpinState spin, const GateWindow& gate,
                       const PulseTrain& train);

/// Detected rate in counts/s with the gate open from `gate_onset` to the end
/// of the period.
GatedCounts steady_rate(const FluorescenceModel& model, SpinState spin, double gate_onset,
                        const PulseTrain& train);

/// Expected TCSPC histogram over one period, accumulated for
/// `integration_time` seconds.
ExpectedHistogram histogram_expectation(const FluorescenceModel& model, SpinState spin,
                                        const PulseTrain& train, double bin_width,
                                        double integration_time,
                                        Channel channel = Channel::mw_off);

/// The model actually seen under `train`: amplitudes rescaled in folded mode,
/// unchanged otherwise.
FluorescenceModel effective_model(const FluorescenceModel& model, const PulseTrain& train);

/// Multiplies every decay amplitude (spin and background) by `factor`. The dark
/// rate is left alone since it does not depend on excitation.
FluorescenceModel scale_amplitudes(FluorescenceModel model, double factor);

/// How a background-to-signal "noise level" is measured.
enum class RatioKind { amplitude, integrated };

/// Rescales the background components so that background:spin0 equals `ratio`,
/// either as summed peak amplitudes or as photons integrated over one period.
FluorescenceModel with_background_ratio(FluorescenceModel model, double ratio, RatioKind kind,
                                        const PulseTrain& train);

}  // namespace tgate

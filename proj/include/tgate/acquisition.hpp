#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tgate/decay_model.hpp"
#include "tgate/histogram.hpp"

namespace tgate {

struct PhotonEvent {
  double timestamp = 0.0;  // ns since acquisition start
  Channel channel = Channel::mw_off;

  friend bool operator==(const PhotonEvent&, const PhotonEvent&) = default;
};

/// Poisson realization of an expected histogram, one independent draw per bin.
CountHistogram sample_histogram(const ExpectedHistogram& expectation, std::uint64_t seed);

struct EventSimConfig {
  double integration_time = 1.0;  // s
  double mw_toggle_rate = 50.0;   // Hz, square wave starting MW-off at t = 0
  double c_sat = 0.15;            // m_S=±1 fraction while the MW is on
};

/// MW state of the square-wave toggle at absolute time `t_ns`.
Channel mw_state(double t_ns, double toggle_rate);

/// Photon arrival stream. Each pulse draws a Poisson number of photons from
/// the active channel's intensity restricted to one period; arrival times come
/// from inversion sampling. Events are emitted in timestamp order.
std::vector<PhotonEvent> simulate_events(const FluorescenceModel& model, const PulseTrain& train,
                                         const EventSimConfig& cfg, std::uint64_t seed);

/// Timing of the detector-pulse switch relative to each laser trigger.
struct HwGateConfig {
  double trigger_delay = 0.0;  // ns, gate opens this long after the trigger
  double gate_length = 0.0;    // ns
  double jitter_sigma = 0.0;   // ns, per-pulse Gaussian timing jitter of the switch

  void validate(const PulseTrain& train) const;
};

/// Time of an event relative to the start of its laser period.
inline double phase_in_period(double timestamp, double period) {
  return std::fmod(timestamp, period);
}

/// Events that pass the hardware switch: phase in
/// [delay + J, delay + length + J) with one jitter draw J per pulse.
std::vector<PhotonEvent> hw_gate(std::span<const PhotonEvent> events, const PulseTrain& train,
                                 const HwGateConfig& cfg, std::uint64_t seed);

/// Post-processing filter on recorded events: keep those whose phase falls
/// in `gate`.
std::vector<PhotonEvent> offline_gate(std::span<const PhotonEvent> events, const PulseTrain& train,
                                      const GateWindow& gate);

/// Folds events of one channel into a per-period histogram.
CountHistogram bin_events(std::span<const PhotonEvent> events, const PulseTrain& train,
                          double bin_width, Channel channel, double integration_time);

/// Sum of the bins lying entirely inside `gate`. The gate edges must fall on
/// bin boundaries; partial bins are rejected.
template <typename Scalar>
Scalar gated_sum(const Histogram<Scalar>& h, const GateWindow& gate);

struct McConfig {
  double integration_time = 10.0;  // s, both channels together
  double mw_duty = 0.5;
  double c_sat = 0.15;
  double bin_width = 0.1;  // ns
  std::size_t trials = 1000;
  unsigned threads = 0;
};

struct SnrDistribution {
  double mean = 0.0;
  double stddev = 0.0;    // sample standard deviation
  double analytic = 0.0;  // SNR of the expected counts
  Eigen::VectorXd samples;
};

/// Repeated Poisson realizations of both channel histograms, gated and reduced
/// to an SNR per trial. Trial seeds are derived from `seed`.
SnrDistribution mc_snr_distribution(const FluorescenceModel& model, const GateWindow& gate,
                                    const PulseTrain& train, const McConfig& cfg,
                                    std::uint64_t seed);

}  // namespace tgate

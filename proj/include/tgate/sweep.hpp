#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tgate/decay_model.hpp"
#include "tgate/metrics.hpp"

namespace tgate {

enum class PowerMode { constant_mean_power, constant_pulse_energy };

std::string_view to_string(PowerMode mode);
PowerMode parse_power_mode(std::string_view text);

struct SweepConfig {
  double integration_time = 10.0;  // s, both channels together
  double mw_duty = 0.5;            // fraction of the integration spent with MW on
  /// Fraction of the NV population driven into m_S=±1 while the MW is on.
  double c_sat = 0.15;
  double tau_c_step = 0.1;          // ns
  double tau_c_max_fraction = 0.8;  // default grid ends at this fraction of the period
  std::vector<double> tau_c_grid;   // explicit grid (ns); overrides step/fraction when set
  std::vector<double> rate_grid;    // Hz
  std::optional<double> linewidth;  // Hz; enables eta columns
  PowerMode power_mode = PowerMode::constant_pulse_energy;
  double reference_rate = 40e6;     // Hz; amplitudes are quoted at this rate
  TailMode tail = TailMode::truncated;
  /// Gate onset held fixed across a repetition-rate sweep instead of being
  /// optimized per rate.
  std::optional<double> fixed_tau_c;
  PhysicalConstants constants;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct GateSweepReport {
  Eigen::VectorXd tau_c;       // ns
  Eigen::VectorXd n0;          // MW-off counts
  Eigen::VectorXd n1;          // MW-on counts
  Eigen::VectorXd contrast;
  Eigen::VectorXd shot_noise;  // sqrt(N0 + N1)
  Eigen::VectorXd snr;
  Eigen::VectorXd ef;          // relative to the ungated (tau_c = 0) SNR
  std::optional<Eigen::VectorXd> eta;  // T/sqrt(Hz); +inf where the dip vanishes
  Eigen::Index optimum = 0;    // index of max SNR
};

struct RepRateSweepReport {
  Eigen::VectorXd rate;          // Hz
  PowerMode mode = PowerMode::constant_pulse_energy;
  Eigen::VectorXd snr_ungated;
  Eigen::VectorXd snr_gated;
  std::optional<Eigen::VectorXd> eta_ungated;
  std::optional<Eigen::VectorXd> eta_gated;
  Eigen::VectorXd tau_c;         // gate used for the gated columns, per rate
  Eigen::Index optimum = 0;      // index of max gated SNR (ties: lowest rate)
};

struct JointOptimum {
  double tau_c = 0.0;  // ns
  double rate = 0.0;   // Hz
  double snr = 0.0;
};

/// Default onset grid for a period: 0 to tau_c_max_fraction*period in
/// tau_c_step increments.
std::vector<double> default_tau_c_grid(const SweepConfig& cfg, double period);

/// Per-channel counts accumulated over the integration time with the gate
/// open from `tau_c` to the end of the period.
CountPair channel_counts(const FluorescenceModel& model, const PulseTrain& train,
                         const SweepConfig& cfg, double tau_c);

/// Per-channel detected rates, the R0/R1 of the CW sensitivity formula.
RatePair channel_rates(const FluorescenceModel& model, const PulseTrain& train,
                       const SweepConfig& cfg, double tau_c);

GateSweepReport sweep_gate(const FluorescenceModel& model, const PulseTrain& train,
                           const SweepConfig& cfg);

/// Onset with maximal SNR; ties go to the smallest onset.
double optimal_gate(const GateSweepReport& report);

/// Model amplitudes at `rate` for the configured power mode. Constant mean
/// power scales amplitudes by reference_rate/rate; constant pulse energy
/// leaves them unchanged.
FluorescenceModel model_at_rate(const FluorescenceModel& model, const SweepConfig& cfg, double rate);

RepRateSweepReport sweep_rep_rate(const FluorescenceModel& model, const SweepConfig& cfg);

JointOptimum joint_optimum(const FluorescenceModel& model, const SweepConfig& cfg);

/// Rescales the background so the ungated MW-off/MW-on contrast under `train`
/// equals `target`.
FluorescenceModel with_ungated_contrast(FluorescenceModel model, const PulseTrain& train,
                                        const SweepConfig& cfg, double target);

/// Rescales all amplitudes so the duty-weighted ungated count rate equals
/// `rate` counts/s. The dark rate is kept.
FluorescenceModel with_total_rate(FluorescenceModel model, const PulseTrain& train,
                                  const SweepConfig& cfg, double rate);

}  // namespace tgate

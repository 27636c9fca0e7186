#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "tgate/acquisition.hpp"
#include "tgate/decay_model.hpp"
#include "tgate/error.hpp"
#include "tgate/odmr.hpp"
#include "tgate/scan_map.hpp"
#include "tgate/sweep.hpp"

namespace tgate {

/// Invalid configuration, naming the offending section/key.
class ConfigError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct OdmrSettings {
  double freq_start = 2.82e9;  // Hz
  double freq_stop = 2.92e9;   // Hz
  int points = 201;
  double integration_per_point = 0.1;  // s
  DoubletTruth dips{{{2.865e9, 8e6, 0.3}, {2.875e9, 8e6, 0.3}}};
  FitOptions fit;

  Eigen::VectorXd frequencies() const;
};

struct HwSettings {
  HwGateConfig gate;
  EventSimConfig events;
};

struct RunConfig {
  FluorescenceModel model;
  std::optional<double> background_ratio;
  RatioKind ratio_kind = RatioKind::amplitude;
  std::optional<double> ungated_contrast;
  std::optional<double> total_rate;  // counts/s

  double rep_rate = 20e6;  // Hz
  SweepConfig sweep;
  double gate_start = 0.0;          // ns
  std::optional<double> gate_end;   // ns; defaults to the period
  McConfig mc;
  OdmrSettings odmr;
  HwSettings hw;
  ScanScene scan;
  int interp_factor = 4;
  std::uint64_t seed = 0;
  double bin_width = 0.1;  // ns
  std::optional<std::string> out;

  PulseTrain train() const { return PulseTrain(rep_rate, sweep.tail); }
  GateWindow gate() const;

  /// Model after the background/rate calibrations requested in [model].
  FluorescenceModel resolved_model() const;
};

/// INI-style config: `[section]` headers, `key = value` lines, `#`/`;`
/// comments. Unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace tgate

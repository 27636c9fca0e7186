#include "tgate/decay_model.hpp"

#include <cmath>
#include <numeric>

#include "tgate/quadrature.hpp"
#include "tgate/special.hpp"

namespace tgate {

std::string_view to_string(Channel channel) {
  return channel == Channel::mw_on ? "mw_on" : "mw_off";
}

Channel parse_channel(std::string_view text) {
  if (text == "mw_on") return Channel::mw_on;
  if (text == "mw_off") return Channel::mw_off;
  throw ValidationError("unknown channel '" + std::string(text) + "' (expected mw_on|mw_off)");
}

Eigen::Index commensurate_bins(double period, double bin_width) {
  require(bin_width > 0.0 && std::isfinite(bin_width), "bin width must be positive");
  const double n = std::round(period / bin_width);
  require(n >= 1.0 && std::abs(n * bin_width - period) <= 1e-9 * period,
          "bin width does not divide the laser period");
  return static_cast<Eigen::Index>(n);
}

void DecayComponent::validate() const {
  require(std::isfinite(amplitude) && amplitude >= 0.0,
          "component '" + label + "': amplitude must be >= 0");
  require(std::isfinite(lifetime) && lifetime > 0.0,
          "component '" + label + "': lifetime must be > 0");
}

SpinState SpinState::mixed(double ms1_fraction) {
  require(ms1_fraction >= 0.0 && ms1_fraction <= 1.0, "spin mixture fraction must lie in [0, 1]");
  return SpinState(ms1_fraction);
}

void FluorescenceModel::validate() const {
  require(!spin0.empty(), "model needs at least one spin-0 component");
  require(!spin1.empty(), "model needs at least one spin-1 component");
  for (const auto* list : {&spin0, &spin1, &background})
    for (const auto& c : *list) c.validate();
  require(std::isfinite(dark_rate) && dark_rate >= 0.0, "dark rate must be >= 0");
  require(std::isfinite(irf_sigma) && irf_sigma >= 0.0, "IRF sigma must be >= 0");
  require(std::isfinite(pulse_time), "pulse time must be finite");
}

GateWindow::GateWindow(double t_start, double t_end) : t_start_(t_start), t_end_(t_end) {
  require(std::isfinite(t_start) && t_start >= 0.0, "gate start must be finite and >= 0");
  require(!std::isnan(t_end) && t_end > t_start, "gate end must exceed gate start");
}

PulseTrain::PulseTrain(double rep_rate, TailMode tail) : rep_rate_(rep_rate), tail_(tail) {
  require(std::isfinite(rep_rate) && rep_rate > 0.0, "repetition rate must be > 0");
}

namespace {

double component_sum(const std::vector<DecayComponent>& comps, double sigma, double u) {
  double sum = 0.0;
  for (const auto& c : comps) sum += emg(c.amplitude, c.lifetime, sigma, u);
  return sum;
}

double closed_form_sum(const std::vector<DecayComponent>& comps, double u0, double u1) {
  double sum = 0.0;
  for (const auto& c : comps) sum += exponential_integral(c.amplitude, c.lifetime, u0, u1);
  return sum;
}

}  // namespace

double expected_intensity(const FluorescenceModel& model, SpinState spin, double t) {
  const double u = t - model.pulse_time;
  const double s = model.irf_sigma;
  double value = model.dark_rate + component_sum(model.background, s, u);
  if (spin.ms0_fraction() > 0.0) value += spin.ms0_fraction() * component_sum(model.spin0, s, u);
  if (spin.ms1_fraction() > 0.0) value += spin.ms1_fraction() * component_sum(model.spin1, s, u);
  return value;
}

double gated_counts_exponential(const DecayComponent& comp, const GateWindow& gate) {
  return exponential_integral(comp.amplitude, comp.lifetime, gate.t_start(), gate.t_end());
}

GatedCounts gated_counts(const FluorescenceModel& model, SpinState spin, const GateWindow& gate) {
  GatedCounts out;
  if (model.dark_rate > 0.0) {
    require(gate.bounded(), "dark counts require a finite gate window");
    out.dark = model.dark_rate * gate.length();
  }

  const double w0 = spin.ms0_fraction();
  const double w1 = spin.ms1_fraction();

  if (model.irf_sigma == 0.0) {
    const double u0 = std::max(gate.t_start() - model.pulse_time, 0.0);
    const double u1 = gate.t_end() - model.pulse_time;
    if (u1 > u0) {
      if (w0 > 0.0) out.signal += w0 * closed_form_sum(model.spin0, u0, u1);
      if (w1 > 0.0) out.signal += w1 * closed_form_sum(model.spin1, u0, u1);
      out.background = closed_form_sum(model.background, u0, u1);
    }
    return out;
  }

  require(gate.bounded(), "quadrature requires finite window");
  const double s = model.irf_sigma;
  const double tp = model.pulse_time;
  auto signal = [&](double t) {
    double v = 0.0;
    if (w0 > 0.0) v += w0 * component_sum(model.spin0, s, t - tp);
    if (w1 > 0.0) v += w1 * component_sum(model.spin1, s, t - tp);
    return v;
  };
  auto background = [&](double t) { return component_sum(model.background, s, t - tp); };
  out.signal = integrate(signal, gate.t_start(), gate.t_end());
  if (!model.background.empty())
    out.background = integrate(background, gate.t_start(), gate.t_end());
  return out;
}

FluorescenceModel effective_model(const FluorescenceModel& model, const PulseTrain& train) {
  if (train.tail() == TailMode::truncated) return model;
  FluorescenceModel folded = model;
  const double period = train.period();
  for (auto* list : {&folded.spin0, &folded.spin1, &folded.background})
    for (auto& c : *list) c.amplitude /= -std::expm1(-period / c.lifetime);
  return folded;
}

GatedCounts gated_counts(const FluorescenceModel& model, SpinState spin, const GateWindow& gate,
                         const PulseTrain& train) {
  require(gate.t_end() <= train.period() * (1.0 + 1e-12), "gate exceeds pulse period");
  return gated_counts(effective_model(model, train), spin, gate);
}

GatedCounts gated_rate(const FluorescenceModel& model, SpinState spin, const GateWindow& gate,
                       const PulseTrain& train) {
  return gated_counts(model, spin, gate, train) * train.rep_rate();
}

GatedCounts steady_rate(const FluorescenceModel& model, SpinState spin, double gate_onset,
                        const PulseTrain& train) {
  require(gate_onset < train.period(), "gate exceeds pulse period");
  return gated_rate(model, spin, GateWindow(gate_onset, train.period()), train);
}

ExpectedHistogram histogram_expectation(const FluorescenceModel& model, SpinState spin,
                                        const PulseTrain& train, double bin_width,
                                        double integration_time, Channel channel) {
  require(integration_time >= 0.0, "integration time must be >= 0");
  const double period = train.period();
  const Eigen::Index n = commensurate_bins(period, bin_width);
  const FluorescenceModel eff = effective_model(model, train);
  const double pulses = integration_time * train.rep_rate();

  ExpectedHistogram h;
  h.bin_width = bin_width;
  h.rep_rate = train.rep_rate();
  h.integration_time = integration_time;
  h.channel = channel;
  h.counts.resize(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const double lo = static_cast<double>(b) * bin_width;
    const double hi = b + 1 == n ? period : static_cast<double>(b + 1) * bin_width;
    h.counts[b] = pulses * gated_counts(eff, spin, GateWindow(lo, hi)).total();
  }
  return h;
}

FluorescenceModel scale_amplitudes(FluorescenceModel model, double factor) {
  require(std::isfinite(factor) && factor >= 0.0, "amplitude scale must be finite and >= 0");
  for (auto* list : {&model.spin0, &model.spin1, &model.background})
    for (auto& c : *list) c.amplitude *= factor;
  return model;
}

FluorescenceModel with_background_ratio(FluorescenceModel model, double ratio, RatioKind kind,
                                        const PulseTrain& train) {
  require(std::isfinite(ratio) && ratio >= 0.0, "background ratio must be >= 0");
  require(!model.background.empty(), "background ratio needs at least one background component");
  double bg = 0.0;
  double sig = 0.0;
  if (kind == RatioKind::amplitude) {
    for (const auto& c : model.background) bg += c.amplitude;
    for (const auto& c : model.spin0) sig += c.amplitude;
  } else {
    FluorescenceModel dark_free = model;
    dark_free.dark_rate = 0.0;
    const auto counts = gated_counts(dark_free, Spin::ms0, GateWindow(0.0, train.period()), train);
    bg = counts.background;
    sig = counts.signal;
  }
  require(bg > 0.0 && sig > 0.0, "background ratio needs non-zero background and signal");
  const double k = ratio * sig / bg;
  for (auto& c : model.background) c.amplitude *= k;
  return model;
}

}  // namespace tgate

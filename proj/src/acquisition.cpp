#include "tgate/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tgate/metrics.hpp"
#include "tgate/parallel.hpp"
#include "tgate/quadrature.hpp"
#include "tgate/random.hpp"
#include "tgate/special.hpp"

namespace tgate {

CountHistogram sample_histogram(const ExpectedHistogram& expectation, std::uint64_t seed) {
  require(expectation.counts.size() > 0, "histogram has no bins");
  require((expectation.counts.array() >= 0.0).all() && expectation.counts.allFinite(),
          "negative expectation in histogram");
  Engine rng = make_engine(seed);
  CountHistogram out;
  out.bin_width = expectation.bin_width;
  out.channel = expectation.channel;
  out.integration_time = expectation.integration_time;
  out.rep_rate = expectation.rep_rate;
  out.mw_frequency = expectation.mw_frequency;
  out.counts.resize(expectation.counts.size());
  for (Eigen::Index b = 0; b < out.counts.size(); ++b) {
    const double mean = expectation.counts[b];
    if (mean == 0.0) {
      out.counts[b] = 0;
      continue;
    }
    std::poisson_distribution<std::int64_t> draw(mean);
    out.counts[b] = draw(rng);
  }
  return out;
}

Channel mw_state(double t_ns, double toggle_rate) {
  const auto half_periods = static_cast<std::int64_t>(std::floor(t_ns * 1e-9 * 2.0 * toggle_rate));
  return half_periods % 2 == 0 ? Channel::mw_off : Channel::mw_on;
}

namespace {

/// Draws photon arrival phases within one period for a fixed spin state.
class PhaseSampler {
 public:
  PhaseSampler(const FluorescenceModel& model, SpinState spin, const PulseTrain& train)
      : period_(train.period()) {
    const FluorescenceModel eff = effective_model(model, train);
    const GateWindow full(0.0, period_);
    mean_per_pulse_ = gated_counts(eff, spin, full).total();
    if (eff.irf_sigma == 0.0) {
      build_mixture(eff, spin);
    } else {
      build_table(eff, spin);
    }
  }

  double mean_per_pulse() const { return mean_per_pulse_; }

  double operator()(Engine& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (table_.empty()) {
      const Part& p = parts_[pick_(rng)];
      const double u = unit(rng);
      if (p.lifetime == 0.0) return u * period_;  // dark counts: uniform
      // truncated exponential on [onset, period)
      const double span = period_ - p.onset;
      return p.onset - p.lifetime * std::log1p(-u * -std::expm1(-span / p.lifetime));
    }
    const double target = unit(rng) * table_.back();
    const auto it = std::upper_bound(table_.begin(), table_.end(), target);
    const auto j = static_cast<std::size_t>(std::distance(table_.begin(), it));
    if (j == 0) return 0.0;
    if (j >= table_.size()) return std::nextafter(period_, 0.0);
    const double lo = table_[j - 1];
    const double hi = table_[j];
    const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.0;
    const double t = (static_cast<double>(j - 1) + frac) * step_;
    return std::min(t, std::nextafter(period_, 0.0));
  }

 private:
  struct Part {
    double onset;
    double lifetime;  // 0 marks the flat dark part
  };

  void build_mixture(const FluorescenceModel& m, SpinState spin) {
    const double onset = std::clamp(m.pulse_time, 0.0, period_);
    std::vector<double> weights;
    auto add = [&](const std::vector<DecayComponent>& comps, double w) {
      if (w <= 0.0) return;
      for (const auto& c : comps) {
        const double mass = w * exponential_integral(c.amplitude, c.lifetime,
                                                     onset - m.pulse_time, period_ - m.pulse_time);
        if (mass <= 0.0) continue;
        parts_.push_back({onset, c.lifetime});
        weights.push_back(mass);
      }
    };
    add(m.spin0, spin.ms0_fraction());
    add(m.spin1, spin.ms1_fraction());
    add(m.background, 1.0);
    if (m.dark_rate > 0.0) {
      parts_.push_back({0.0, 0.0});
      weights.push_back(m.dark_rate * period_);
    }
    if (parts_.empty()) {
      parts_.push_back({0.0, 0.0});
      weights.push_back(1.0);
    }
    pick_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  // Cumulative intensity tabulated on a 10 ps grid.
  void build_table(const FluorescenceModel& m, SpinState spin) {
    const auto cells = static_cast<std::size_t>(std::ceil(period_ / 0.01));
    step_ = period_ / static_cast<double>(cells);
    table_.assign(cells + 1, 0.0);
    auto f = [&](double t) { return expected_intensity(m, spin, t); };
    QuadratureOptions opt;
    opt.relative_tolerance = 1e-8;
    opt.min_depth = 0;
    for (std::size_t j = 0; j < cells; ++j) {
      const double lo = static_cast<double>(j) * step_;
      table_[j + 1] = table_[j] + integrate(f, lo, lo + step_, opt);
    }
  }

  double period_;
  double mean_per_pulse_ = 0.0;
  std::vector<Part> parts_;
  std::discrete_distribution<std::size_t> pick_;
  std::vector<double> table_;
  double step_ = 0.0;
};

}  // namespace

std::vector<PhotonEvent> simulate_events(const FluorescenceModel& model, const PulseTrain& train,
                                         const EventSimConfig& cfg, std::uint64_t seed) {
  model.validate();
  require(cfg.integration_time > 0.0, "integration time must be > 0");
  require(cfg.mw_toggle_rate > 0.0 && cfg.mw_toggle_rate * 10.0 <= train.rep_rate(),
          "MW toggle rate must be far below the repetition rate");

  PhaseSampler off(model, Spin::ms0, train);
  PhaseSampler on(model, SpinState::mixed(cfg.c_sat), train);
  std::poisson_distribution<int> n_off(std::max(off.mean_per_pulse(), 1e-300));
  std::poisson_distribution<int> n_on(std::max(on.mean_per_pulse(), 1e-300));

  const double period = train.period();
  const auto pulses = static_cast<std::int64_t>(std::llround(cfg.integration_time * train.rep_rate()));
  Engine rng = make_engine(seed);

  std::vector<PhotonEvent> events;
  events.reserve(static_cast<std::size_t>(
      static_cast<double>(pulses) * 0.5 * (off.mean_per_pulse() + on.mean_per_pulse()) * 1.05 + 16));
  std::vector<double> phases;
  for (std::int64_t k = 0; k < pulses; ++k) {
    const double start = static_cast<double>(k) * period;
    const Channel ch = mw_state(start, cfg.mw_toggle_rate);
    const bool is_on = ch == Channel::mw_on;
    const double mean = is_on ? on.mean_per_pulse() : off.mean_per_pulse();
    if (mean <= 0.0) continue;
    const int n = is_on ? n_on(rng) : n_off(rng);
    if (n == 0) continue;
    phases.clear();
    for (int i = 0; i < n; ++i) phases.push_back(is_on ? on(rng) : off(rng));
    std::sort(phases.begin(), phases.end());
    for (double p : phases) events.push_back({start + p, ch});
  }
  return events;
}

void HwGateConfig::validate(const PulseTrain& train) const {
  require(trigger_delay >= 0.0, "trigger delay must be >= 0");
  require(gate_length > 0.0, "gate length must be > 0");
  require(trigger_delay + gate_length <= train.period() * (1.0 + 1e-12),
          "gate exceeds pulse period");
  require(jitter_sigma >= 0.0, "jitter sigma must be >= 0");
}

std::vector<PhotonEvent> hw_gate(std::span<const PhotonEvent> events, const PulseTrain& train,
                                 const HwGateConfig& cfg, std::uint64_t seed) {
  cfg.validate(train);
  const double period = train.period();
  Engine rng = make_engine(seed);
  std::normal_distribution<double> jitter(0.0, cfg.jitter_sigma > 0.0 ? cfg.jitter_sigma : 1.0);

  std::vector<PhotonEvent> kept;
  kept.reserve(events.size());
  std::int64_t pulse = -1;
  double open = cfg.trigger_delay;
  double close = cfg.trigger_delay + cfg.gate_length;
  double last = -kUnbounded;
  for (const auto& e : events) {
    require(e.timestamp >= last, "event stream is not sorted");
    last = e.timestamp;
    const auto k = static_cast<std::int64_t>(std::floor(e.timestamp / period));
    if (k != pulse) {
      pulse = k;
      if (cfg.jitter_sigma > 0.0) {
        const double j = jitter(rng);
        open = cfg.trigger_delay + j;
        close = cfg.trigger_delay + cfg.gate_length + j;
      }
    }
    const double phase = phase_in_period(e.timestamp, period);
    if (phase >= open && phase < close) kept.push_back(e);
  }
  return kept;
}

std::vector<PhotonEvent> offline_gate(std::span<const PhotonEvent> events, const PulseTrain& train,
                                      const GateWindow& gate) {
  const double period = train.period();
  std::vector<PhotonEvent> kept;
  std::copy_if(events.begin(), events.end(), std::back_inserter(kept), [&](const PhotonEvent& e) {
    const double phase = std::fmod(e.timestamp, period);
    return phase >= gate.t_start() && phase < gate.t_end();
  });
  return kept;
}

CountHistogram bin_events(std::span<const PhotonEvent> events, const PulseTrain& train,
                          double bin_width, Channel channel, double integration_time) {
  const double period = train.period();
  const Eigen::Index n = commensurate_bins(period, bin_width);
  CountHistogram h;
  h.bin_width = bin_width;
  h.rep_rate = train.rep_rate();
  h.channel = channel;
  h.integration_time = integration_time;
  h.counts = CountHistogram::Vector::Zero(n);
  for (const auto& e : events) {
    if (e.channel != channel) continue;
    auto b = static_cast<Eigen::Index>(phase_in_period(e.timestamp, period) / bin_width);
    h.counts[std::min(b, n - 1)] += 1;
  }
  return h;
}

template <typename Scalar>
Scalar gated_sum(const Histogram<Scalar>& h, const GateWindow& gate) {
  const double period = h.period();
  const double end = std::min(gate.t_end(), period);
  const double first = gate.t_start() / h.bin_width;
  const double last = end / h.bin_width;
  const double tol = 1e-9 * std::max(1.0, static_cast<double>(h.size()));
  require(std::abs(first - std::round(first)) <= tol && std::abs(last - std::round(last)) <= tol,
          "gate is not aligned to bin boundaries");
  const auto b0 = static_cast<Eigen::Index>(std::round(first));
  const auto b1 = std::min(static_cast<Eigen::Index>(std::round(last)), h.size());
  require(b0 < b1, "gate selects no bins");
  return h.counts.segment(b0, b1 - b0).sum();
}

template double gated_sum(const Histogram<double>&, const GateWindow&);
template std::int64_t gated_sum(const Histogram<std::int64_t>&, const GateWindow&);

SnrDistribution mc_snr_distribution(const FluorescenceModel& model, const GateWindow& gate,
                                    const PulseTrain& train, const McConfig& cfg,
                                    std::uint64_t seed) {
  require(cfg.trials >= 2, "at least two trials are required");
  require(cfg.mw_duty > 0.0 && cfg.mw_duty < 1.0, "mw_duty must lie in (0, 1)");
  const ExpectedHistogram off =
      histogram_expectation(model, Spin::ms0, train, cfg.bin_width,
                            cfg.integration_time * (1.0 - cfg.mw_duty), Channel::mw_off);
  const ExpectedHistogram on =
      histogram_expectation(model, SpinState::mixed(cfg.c_sat), train, cfg.bin_width,
                            cfg.integration_time * cfg.mw_duty, Channel::mw_on);

  SnrDistribution out;
  out.analytic = snr({gated_sum(off, gate), gated_sum(on, gate)});
  out.samples.resize(static_cast<Eigen::Index>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    const auto s_off = sample_histogram(off, derive_seed(seed, {t, 0}));
    const auto s_on = sample_histogram(on, derive_seed(seed, {t, 1}));
    const CountPair c{static_cast<double>(gated_sum(s_off, gate)),
                      static_cast<double>(gated_sum(s_on, gate))};
    out.samples[static_cast<Eigen::Index>(t)] = c.n0 + c.n1 > 0.0 ? snr(c) : 0.0;
  });
  out.mean = out.samples.mean();
  const double n = static_cast<double>(cfg.trials);
  out.stddev = std::sqrt((out.samples.array() - out.mean).square().sum() / (n - 1.0));
  return out;
}

}  // namespace tgate

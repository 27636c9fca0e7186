#include "tgate/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tgate/parallel.hpp"

namespace tgate {

std::string_view to_string(PowerMode mode) {
  return mode == PowerMode::constant_mean_power ? "constant-mean-power" : "constant-pulse-energy";
}

PowerMode parse_power_mode(std::string_view text) {
  if (text == "constant-mean-power") return PowerMode::constant_mean_power;
  if (text == "constant-pulse-energy") return PowerMode::constant_pulse_energy;
  throw ValidationError("unknown power mode '" + std::string(text) + "'");
}

void SweepConfig::validate() const {
  require(integration_time > 0.0 && std::isfinite(integration_time),
          "integration time must be > 0");
  require(mw_duty > 0.0 && mw_duty < 1.0, "mw_duty must lie in (0, 1)");
  require(c_sat >= 0.0 && c_sat <= 1.0, "c_sat must lie in [0, 1]");
  require(tau_c_step > 0.0 && std::isfinite(tau_c_step), "tau_c resolution must be > 0");
  require(tau_c_max_fraction > 0.0 && tau_c_max_fraction < 1.0,
          "tau_c_max_fraction must lie in (0, 1)");
  require(std::is_sorted(tau_c_grid.begin(), tau_c_grid.end()), "tau_c grid must be ascending");
  for (double t : tau_c_grid) require(t >= 0.0 && std::isfinite(t), "tau_c grid values must be >= 0");
  for (double r : rate_grid) require(r > 0.0 && std::isfinite(r), "rates must be > 0");
  if (linewidth) require(*linewidth > 0.0, "linewidth must be > 0");
  require(reference_rate > 0.0, "reference rate must be > 0");
  if (fixed_tau_c) require(*fixed_tau_c >= 0.0, "fixed tau_c must be >= 0");
  constants.validate();
}

std::vector<double> default_tau_c_grid(const SweepConfig& cfg, double period) {
  const double stop = cfg.tau_c_max_fraction * period;
  const auto n = static_cast<std::size_t>(std::floor(stop / cfg.tau_c_step + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * cfg.tau_c_step;
  return grid;
}

RatePair channel_rates(const FluorescenceModel& model, const PulseTrain& train,
                       const SweepConfig& cfg, double tau_c) {
  return {steady_rate(model, Spin::ms0, tau_c, train).total(),
          steady_rate(model, SpinState::mixed(cfg.c_sat), tau_c, train).total()};
}

CountPair channel_counts(const FluorescenceModel& model, const PulseTrain& train,
                         const SweepConfig& cfg, double tau_c) {
  const RatePair r = channel_rates(model, train, cfg, tau_c);
  return {r.r0 * cfg.integration_time * (1.0 - cfg.mw_duty),
          r.r1 * cfg.integration_time * cfg.mw_duty};
}

namespace {

double eta_or_inf(const SweepConfig& cfg, const RatePair& rates) {
  if (!(rates.r0 > rates.r1) || !(rates.r1 > 0.0)) return kUnbounded;
  return sensitivity_cw(*cfg.linewidth, rates, cfg.constants);
}

Eigen::Index first_argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

GateSweepReport sweep_gate(const FluorescenceModel& model, const PulseTrain& train,
                           const SweepConfig& cfg) {
  model.validate();
  cfg.validate();
  const std::vector<double> grid =
      cfg.tau_c_grid.empty() ? default_tau_c_grid(cfg, train.period()) : cfg.tau_c_grid;
  require(!grid.empty(), "empty tau_c grid");
  require(grid.back() < train.period(), "tau_c grid must lie within [0, period)");

  const auto n = static_cast<Eigen::Index>(grid.size());
  GateSweepReport rep;
  rep.tau_c = Eigen::Map<const Eigen::VectorXd>(grid.data(), n);
  rep.n0.resize(n);
  rep.n1.resize(n);
  rep.contrast.resize(n);
  rep.shot_noise.resize(n);
  rep.snr.resize(n);
  rep.ef.resize(n);
  if (cfg.linewidth) rep.eta = Eigen::VectorXd(n);

  const CountPair baseline = channel_counts(model, train, cfg, 0.0);
  const double baseline_snr = snr(baseline);

  parallel_for(grid.size(), cfg.threads, [&](std::size_t k) {
    const auto i = static_cast<Eigen::Index>(k);
    const RatePair rates = channel_rates(model, train, cfg, grid[k]);
    const CountPair c{rates.r0 * cfg.integration_time * (1.0 - cfg.mw_duty),
                      rates.r1 * cfg.integration_time * cfg.mw_duty};
    rep.n0[i] = c.n0;
    rep.n1[i] = c.n1;
    rep.contrast[i] = c.n0 > 0.0 ? contrast(c) : 0.0;
    rep.shot_noise[i] = std::sqrt(c.n0 + c.n1);
    rep.snr[i] = c.n0 + c.n1 > 0.0 ? snr(c) : 0.0;
    rep.ef[i] = rep.snr[i] / baseline_snr;
    if (rep.eta) (*rep.eta)[i] = eta_or_inf(cfg, rates);
  });

  rep.optimum = first_argmax(rep.snr);
  return rep;
}

double optimal_gate(const GateSweepReport& report) {
  require(report.snr.size() > 0 && report.snr.size() == report.tau_c.size(), "empty sweep report");
  return report.tau_c[first_argmax(report.snr)];
}

FluorescenceModel model_at_rate(const FluorescenceModel& model, const SweepConfig& cfg, double rate) {
  if (cfg.power_mode == PowerMode::constant_pulse_energy) return model;
  return scale_amplitudes(model, cfg.reference_rate / rate);
}

RepRateSweepReport sweep_rep_rate(const FluorescenceModel& model, const SweepConfig& cfg) {
  model.validate();
  cfg.validate();
  require(!cfg.rate_grid.empty(), "empty repetition-rate grid");

  const auto n = static_cast<Eigen::Index>(cfg.rate_grid.size());
  RepRateSweepReport rep;
  rep.mode = cfg.power_mode;
  rep.rate = Eigen::Map<const Eigen::VectorXd>(cfg.rate_grid.data(), n);
  rep.snr_ungated.resize(n);
  rep.snr_gated.resize(n);
  rep.tau_c.resize(n);
  if (cfg.linewidth) {
    rep.eta_ungated = Eigen::VectorXd(n);
    rep.eta_gated = Eigen::VectorXd(n);
  }

  for (double rate : cfg.rate_grid) {
    const double period = 1e9 / rate;
    require(period > cfg.tau_c_step, "pulse period shorter than the gate resolution");
    if (cfg.fixed_tau_c) require(*cfg.fixed_tau_c < period, "gate exceeds pulse period");
  }

  // Rates run in parallel; each inner gate sweep stays serial.
  SweepConfig inner = cfg;
  inner.threads = 1;
  parallel_for(cfg.rate_grid.size(), cfg.threads, [&](std::size_t k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double rate = cfg.rate_grid[k];
    const PulseTrain train(rate, cfg.tail);
    const FluorescenceModel m = model_at_rate(model, cfg, rate);

    double tau_c = 0.0;
    if (cfg.fixed_tau_c) {
      tau_c = *cfg.fixed_tau_c;
    } else {
      SweepConfig local = inner;
      local.linewidth.reset();
      tau_c = optimal_gate(sweep_gate(m, train, local));
    }
    rep.tau_c[i] = tau_c;
    const RatePair ungated = channel_rates(m, train, cfg, 0.0);
    const RatePair gated = channel_rates(m, train, cfg, tau_c);
    auto to_snr = [&](const RatePair& r) {
      const CountPair c{r.r0 * cfg.integration_time * (1.0 - cfg.mw_duty),
                        r.r1 * cfg.integration_time * cfg.mw_duty};
      return c.n0 + c.n1 > 0.0 ? snr(c) : 0.0;
    };
    rep.snr_ungated[i] = to_snr(ungated);
    rep.snr_gated[i] = to_snr(gated);
    if (cfg.linewidth) {
      (*rep.eta_ungated)[i] = eta_or_inf(cfg, ungated);
      (*rep.eta_gated)[i] = eta_or_inf(cfg, gated);
    }
  });

  // Ties go to the lowest rate regardless of grid order.
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (rep.snr_gated[i] > rep.snr_gated[best] ||
        (rep.snr_gated[i] == rep.snr_gated[best] && rep.rate[i] < rep.rate[best]))
      best = i;
  }
  rep.optimum = best;
  return rep;
}

JointOptimum joint_optimum(const FluorescenceModel& model, const SweepConfig& cfg) {
  require(!cfg.rate_grid.empty(), "empty repetition-rate grid");
  SweepConfig free_gate = cfg;
  free_gate.fixed_tau_c.reset();
  free_gate.linewidth.reset();
  const RepRateSweepReport rep = sweep_rep_rate(model, free_gate);
  const Eigen::Index i = rep.optimum;
  return {rep.tau_c[i], rep.rate[i], rep.snr_gated[i]};
}

FluorescenceModel with_ungated_contrast(FluorescenceModel model, const PulseTrain& train,
                                        const SweepConfig& cfg, double target) {
  require(target > 0.0 && target < 1.0, "target contrast must lie in (0, 1)");
  require(!model.background.empty(), "contrast calibration needs a background component");
  const GateWindow full(0.0, train.period());
  const auto off = gated_counts(model, Spin::ms0, full, train);
  const auto on = gated_counts(model, SpinState::mixed(cfg.c_sat), full, train);
  // (n0 - n1) / (n0 + bg + dark) = target
  const double needed = (off.signal - on.signal) / target - off.signal - off.dark;
  require(needed > 0.0, "target contrast exceeds the background-free contrast");
  require(off.background > 0.0, "background components have zero amplitude");
  const double k = needed / off.background;
  for (auto& c : model.background) c.amplitude *= k;
  return model;
}

FluorescenceModel with_total_rate(FluorescenceModel model, const PulseTrain& train,
                                  const SweepConfig& cfg, double rate) {
  require(rate > 0.0, "target rate must be > 0");
  const auto off = steady_rate(model, Spin::ms0, 0.0, train);
  const auto on = steady_rate(model, SpinState::mixed(cfg.c_sat), 0.0, train);
  const double emitted = (1.0 - cfg.mw_duty) * (off.signal + off.background) +
                         cfg.mw_duty * (on.signal + on.background);
  const double dark = (1.0 - cfg.mw_duty) * off.dark + cfg.mw_duty * on.dark;
  require(emitted > 0.0 && rate > dark, "target rate is below the dark rate");
  return scale_amplitudes(std::move(model), (rate - dark) / emitted);
}

}  // namespace tgate

// Acceptance checks. Usage: tgate_acceptance [N...]; runs all criteria when no
// number is given. Prints one PASS/FAIL line per criterion and exits 1 if any
// criterion failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tgate/acquisition.hpp"
#include "tgate/decay_model.hpp"
#include "tgate/metrics.hpp"
#include "tgate/odmr.hpp"
#include "tgate/quadrature.hpp"
#include "tgate/scan_map.hpp"
#include "tgate/sweep.hpp"

namespace {

using namespace tgate;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

constexpr double kCSat = 0.15;

FluorescenceModel bulk_model(const PulseTrain& train) {
  FluorescenceModel m;
  m.spin0 = {{1.0, 12.0, "nv_ms0"}};
  m.spin1 = {{1.0, 8.0, "nv_ms1"}};
  m.background = {{1.0, 1.7, "siv"}};
  return with_background_ratio(m, 3.0, RatioKind::integrated, train);
}

SweepConfig bulk_sweep() {
  SweepConfig cfg;
  cfg.c_sat = kCSat;
  cfg.linewidth = 8e6;
  return cfg;
}

struct FndSetup {
  FluorescenceModel model;
  PulseTrain train{10e6};
  SweepConfig cfg;
};

FndSetup fnd_setup(double total_rate = 0.0) {
  FndSetup s;
  s.cfg.c_sat = 0.3;
  FluorescenceModel m;
  m.spin0 = {{1.0, 25.0, "nv_ms0"}};
  m.spin1 = {{1.0, 13.0, "nv_ms1"}};
  m.background = {{1.0, 4.0, "nc"}};
  m = with_ungated_contrast(m, s.train, s.cfg, 0.012);
  if (total_rate > 0.0) m = with_total_rate(m, s.train, s.cfg, total_rate);
  s.model = m;
  return s;
}

Outcome criterion1() {
  const double ef = ef_theoretical(0.15, 3.0);
  return {ef >= 2.0 && ef <= 2.1, fmt("ef_theoretical(0.15, 3) = %.6f, want [2.0, 2.1]", ef)};
}

Outcome criterion2() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  double worst = 0.0;
  bool exact_speedup = true;
  for (int k = 0; k < 1000; ++k) {
    const PulseTrain train(log_uniform(1e6, 80e6));
    SweepConfig cfg;
    cfg.c_sat = 0.02 + 0.9 * u(rng);
    cfg.integration_time = log_uniform(0.01, 100.0);
    FluorescenceModel m;
    const double tau0 = log_uniform(2.0, 40.0);
    const double a0 = log_uniform(0.01, 10.0);
    m.spin0 = {{a0, tau0}};
    m.spin1 = {{a0 * (0.3 + 0.7 * u(rng)), tau0 * (0.2 + 0.7 * u(rng))}};
    // Background confined far below the gate onset: the gate removes all of it
    // and nothing of the NV signal.
    const double bg_tau = 1e-20;
    const double bg_yield = log_uniform(0.05, 50.0) * a0 * tau0;
    m.background = {{bg_yield / bg_tau, bg_tau}};
    const double gate = 1e-17;

    const CountPair ungated = channel_counts(m, train, cfg, 0.0);
    const CountPair gated = channel_counts(m, train, cfg, gate);
    // Noise level from the signal-only ungated counts: background per channel over n0.
    const auto off = steady_rate(m, Spin::ms0, 0.0, train);
    const auto on = steady_rate(m, SpinState::mixed(cfg.c_sat), 0.0, train);
    const double c = (off.signal - on.signal) / off.signal;
    const double bg_ratio = off.background / off.signal;
    const double emp = ef_empirical(gated, ungated);
    const double theo = ef_theoretical(c, bg_ratio);
    worst = std::max(worst, rel_err(emp, theo));
    const double sf = speedup(emp);
    if (sf != emp * emp) exact_speedup = false;
  }
  return {worst <= 1e-12 && exact_speedup,
          fmt("1000 models: max rel err %.3e (limit 1e-12), speedup == ef^2 exactly: %s", worst,
              exact_speedup ? "yes" : "no")};
}

Outcome criterion3() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  QuadratureOptions opt;
  opt.relative_tolerance = 1e-13;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const DecayComponent comp{log_uniform(1e-3, 1e3), log_uniform(0.1, 100.0)};
    const double t0 = 60.0 * u(rng);
    const double t1 = t0 + log_uniform(0.01, 200.0);
    const double closed = gated_counts_exponential(comp, GateWindow(t0, t1));
    const double quad = integrate(
        [&](double t) { return comp.amplitude * std::exp(-t / comp.lifetime); }, t0, t1, opt);
    worst = std::max(worst, rel_err(closed, quad));
  }
  return {worst <= 1e-9, fmt("10^4 random cases: max rel err %.3e (limit 1e-9)", worst)};
}

Outcome criterion4() {
  const PulseTrain train(20e6);
  const auto m = bulk_model(train);
  const auto rep = sweep_gate(m, train, bulk_sweep());
  const Eigen::Index i = rep.optimum;
  const Eigen::Index n = rep.snr.size();
  bool unimodal = true;
  for (Eigen::Index k = 1; k <= i; ++k) unimodal &= rep.snr[k] > rep.snr[k - 1];
  for (Eigen::Index k = i + 1; k < n; ++k) unimodal &= rep.snr[k] < rep.snr[k - 1];
  const bool interior = i > 0 && i < n - 1;
  const double ef = rep.ef[i];
  const double eta_gain = (*rep.eta)[0] / (*rep.eta)[i];
  const double mismatch = std::abs(eta_gain / ef - 1.0);
  const bool pass = unimodal && interior && ef >= 1.7 && ef <= 2.3 && mismatch <= 0.05;
  return {pass, fmt("unimodal %s, optimum tau_c %.1f ns (interior %s), EF %.4f in [1.7, 2.3], "
                    "eta gain %.4f, |gain/EF - 1| = %.4f (limit 0.05)",
                    unimodal ? "yes" : "no", rep.tau_c[i], interior ? "yes" : "no", ef, eta_gain,
                    mismatch)};
}

Outcome criterion5() {
  const PulseTrain bulk_train(20e6);
  const double bulk_opt = optimal_gate(sweep_gate(bulk_model(bulk_train), bulk_train, bulk_sweep()));
  const FndSetup s = fnd_setup();
  const auto rep = sweep_gate(s.model, s.train, s.cfg);
  const Eigen::Index i = rep.optimum;
  const double ef = rep.ef[i];
  const double sf = speedup(ef);
  const bool pass = rep.tau_c[i] > 2.0 * bulk_opt && ef >= 3.0 && ef <= 5.0 && sf >= 9.0 && sf <= 25.0;
  return {pass, fmt("ungated contrast %.4f, optimum tau_c %.1f ns vs 2 x bulk %.1f ns, EF %.4f in "
                    "[3, 5], SF %.3f in [9, 25]",
                    rep.contrast[0], rep.tau_c[i], 2.0 * bulk_opt, ef, sf)};
}

Outcome criterion6() {
  FluorescenceModel m;
  m.spin0 = {{1.0, 12.0, "nv_ms0"}};
  m.spin1 = {{1.0, 8.0, "nv_ms1"}};
  m.background = {{1.0, 1.7, "fast_bg"}};
  const PulseTrain ref(20e6);
  m = with_background_ratio(m, 3.0, RatioKind::amplitude, ref);
  SweepConfig cfg;
  cfg.c_sat = kCSat;
  cfg.fixed_tau_c = 10.0;
  cfg.power_mode = PowerMode::constant_pulse_energy;
  for (int period = 12; period <= 200; ++period) cfg.rate_grid.push_back(1e9 / period);
  const auto rep = sweep_rep_rate(m, cfg);
  const double best = 1e9 / rep.rate[rep.optimum];

  SweepConfig mean_power = cfg;
  mean_power.power_mode = PowerMode::constant_mean_power;
  const auto rep_mp = sweep_rep_rate(m, mean_power);
  const double best_mp = 1e9 / rep_mp.rate[rep_mp.optimum];
  return {std::abs(best - 50.0) <= 10.0,
          fmt("optimal period %.0f ns at tau_c 10 ns (want 50 +/- 10); constant mean power gives %.0f ns",
              best, best_mp)};
}

Outcome criterion7() {
  const PulseTrain train(20e6);
  SweepConfig sc = bulk_sweep();
  const auto m = with_total_rate(bulk_model(train), train, sc, 5e6);
  McConfig cfg;
  cfg.integration_time = 10.0;
  cfg.mw_duty = 0.5;
  cfg.c_sat = kCSat;
  cfg.bin_width = 0.1;
  cfg.trials = 1000;
  const auto d = mc_snr_distribution(m, GateWindow(9.2, train.period()), train, cfg, 7);
  const double bound = 3.0 * d.stddev / std::sqrt(1000.0);
  const double gap = std::abs(d.analytic - d.mean);
  return {gap <= bound, fmt("analytic %.4f, mean %.4f, std %.4f: |diff| %.4f vs bound %.4f",
                            d.analytic, d.mean, d.stddev, gap, bound)};
}

Outcome criterion8() {
  const PulseTrain train(20e6);
  SweepConfig sc = bulk_sweep();
  const auto m = with_total_rate(bulk_model(train), train, sc, 5e6);
  EventSimConfig ev;
  ev.integration_time = 0.21;
  ev.c_sat = kCSat;
  auto events = simulate_events(m, train, ev, 8);
  if (events.size() < 1000000)
    return {false, fmt("only %zu events simulated", events.size())};
  events.resize(1000000);
  HwGateConfig hw;
  hw.trigger_delay = 9.2;
  hw.gate_length = train.period() - 9.2;
  const auto a = hw_gate(events, train, hw, 1);
  const auto b = offline_gate(events, train, GateWindow(9.2, train.period()));
  return {a == b, fmt("10^6 events: hw kept %zu, offline kept %zu, identical %s", a.size(), b.size(),
                      a == b ? "yes" : "no")};
}

Outcome criterion9() {
  const PulseTrain train(20e6);
  SweepConfig sc = bulk_sweep();
  const auto m = with_total_rate(bulk_model(train), train, sc, 5e6);
  const Eigen::VectorXd freqs = Eigen::VectorXd::LinSpaced(201, 2.82e9, 2.92e9);
  const DoubletTruth truth{{{2.86e9, 8e6, 0.3}, {2.88e9, 8e6, 0.3}}};
  const double dwell = 0.1;
  const GateWindow gated(9.2, train.period());
  const GateWindow ungated(0.0, train.period());

  auto expected = [&](const GateWindow& g) {
    const double r0 = gated_rate(m, Spin::ms0, g, train).total();
    const double r1 = gated_rate(m, Spin::ms1, g, train).total();
    LorentzianDoublet d{r0 * dwell, truth};
    for (auto& dip : d.dips) dip.depth *= (r0 - r1) / r0;
    return d;
  };
  auto param_err = [](const LorentzianDoublet& got, const LorentzianDoublet& want) {
    double e = rel_err(got.baseline, want.baseline);
    for (int k = 0; k < 2; ++k) {
      e = std::max(e, rel_err(got.dips[k].center, want.dips[k].center));
      e = std::max(e, rel_err(got.dips[k].fwhm, want.dips[k].fwhm));
      e = std::max(e, rel_err(got.dips[k].depth, want.dips[k].depth));
    }
    return e;
  };

  double noiseless = 0.0;
  for (const auto* g : {&gated, &ungated}) {
    const auto fit = fit_double_lorentzian(synth_odmr(m, train, *g, freqs, truth, dwell));
    noiseless = std::max(noiseless, param_err(fit.params, expected(*g)));
  }

  const auto fg = fit_double_lorentzian(synth_odmr(m, train, gated, freqs, truth, dwell, 91)).params;
  const auto fu = fit_double_lorentzian(synth_odmr(m, train, ungated, freqs, truth, dwell, 92)).params;
  const auto want_g = expected(gated).deeper();
  const double c_err = rel_err(fg.deeper().depth, want_g.depth);
  const double w_err = rel_err(fg.deeper().fwhm, want_g.fwhm);
  const double w_shift = rel_err(fg.deeper().fwhm, fu.deeper().fwhm);
  const double c_gain = fg.deeper().depth / fu.deeper().depth;

  const bool pass = noiseless < 1e-6 && c_err <= 0.05 && w_err <= 0.05 && w_shift < 0.02 && c_gain >= 3.0;
  return {pass, fmt("noiseless max rel err %.2e (limit 1e-6); Poisson gated: contrast err %.4f, "
                    "linewidth err %.4f (limit 0.05); gated vs ungated linewidth %.4f (limit 0.02), "
                    "contrast gain %.3f (min 3)",
                    noiseless, c_err, w_err, w_shift, c_gain)};
}

Outcome criterion10() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  bool constants_exact = true;
  bool nodes_exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index rows = 1 + trial % 7;
    const Eigen::Index cols = 1 + (trial * 3) % 9;
    const int f = 1 + trial % 6;
    const double c = u(rng);
    const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(rows, cols, c);
    constants_exact &= (bicubic_upsample(flat, f).array() == c).all();
    const Eigen::MatrixXd in = Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return u(rng); });
    const Eigen::MatrixXd up = bicubic_upsample(in, f);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) nodes_exact &= up(i * f, j * f) == in(i, j);
  }

  std::uniform_real_distribution<double> counts(0.0, 1e4);
  ScanMap same;
  same.gated_off = Eigen::MatrixXd::NullaryExpr(12, 9, [&] { return std::round(counts(rng)); });
  same.gated_off(3, 4) = 0.0;
  same.gated_on = same.gated_off;
  same.ungated_off = same.gated_off * 2.0;
  same.ungated_on = same.ungated_off;
  const bool zero = (snr_map(same, MapChannel::gated).values.array() == 0.0).all() &&
                    (snr_map(same, MapChannel::ungated).values.array() == 0.0).all();

  const FndSetup s = fnd_setup(2e7);
  ScanScene scene;
  scene.nx = 32;
  scene.ny = 32;
  scene.pitch = 0.4;
  scene.dwell = 0.01;
  scene.tau_c = 25.0;
  scene.c_sat = s.cfg.c_sat;
  scene.emitters = {{3.2, 3.2, 0.3, 1.0}, {8.4, 4.0, 0.3, 0.2}, {5.2, 9.6, 0.3, 0.2}};
  const auto scan = synth_scan(s.model, s.train, scene);
  const int f = 4;
  const auto g = snr_map(scan, MapChannel::gated, f).values;
  const auto ug = snr_map(scan, MapChannel::ungated, f).values;
  const auto mask = emitter_mask(scene);
  int weak = 0;
  int satisfied = 0;
  double min_gated = kUnbounded;
  double max_ungated = 0.0;
  for (Eigen::Index iy = 0; iy < scene.ny; ++iy) {
    for (Eigen::Index ix = 0; ix < scene.nx; ++ix) {
      if (!mask(iy, ix)) continue;
      const double sg = g(iy * f, ix * f);
      const double su = ug(iy * f, ix * f);
      if (su >= 1.0) continue;
      ++weak;
      satisfied += sg > 3.0;
      min_gated = std::min(min_gated, sg);
      max_ungated = std::max(max_ungated, su);
    }
  }
  const bool scenario = weak > 0 && satisfied == weak;
  return {constants_exact && nodes_exact && zero && scenario,
          fmt("constants exact %s, nodes exact %s, equal channels zero %s; weak-emitter pixels: %d "
              "with ungated SNR < 1 (max %.3f), %d of them gated SNR > 3 (min %.3f)",
              constants_exact ? "yes" : "no", nodes_exact ? "yes" : "no", zero ? "yes" : "no", weak,
              max_ungated, satisfied, min_gated)};
}

struct Criterion {
  std::function<Outcome()> run;
  double budget_s;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {criterion1, 1.0},  {criterion2, 1.0},  {criterion3, 10.0}, {criterion4, 5.0},
      {criterion5, 5.0},  {criterion6, 10.0}, {criterion7, 60.0}, {criterion8, 5.0},
      {criterion9, 10.0}, {criterion10, 10.0},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) selected.push_back(i);

  bool ok = true;
  for (int n : selected) {
    if (n < 1 || n > static_cast<int>(all.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = all[n - 1].run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < all[n - 1].budget_s;
    const bool pass = out.pass && in_budget;
    ok &= pass;
    std::printf("criterion %d: %s  %s; runtime %.2f s (limit %.0f s)\n", n, pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs, all[n - 1].budget_s);
  }
  return ok ? 0 : 1;
}

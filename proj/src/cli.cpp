#include "tgate/cli.hpp"

#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tgate/acquisition.hpp"
#include "tgate/config.hpp"
#include "tgate/io.hpp"
#include "tgate/odmr.hpp"
#include "tgate/random.hpp"
#include "tgate/scan_map.hpp"
#include "tgate/sweep.hpp"

namespace tgate {

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

struct Context {
  const Common& common;
  std::ostream& out;
  std::string command;

  RunConfig config() const {
    RunConfig cfg = common.config.empty() ? RunConfig{} : load_config(common.config);
    if (common.seed) cfg.seed = *common.seed;
    if (common.threads) cfg.sweep.threads = cfg.mc.threads = *common.threads;
    if (!common.out.empty()) cfg.out = common.out;
    return cfg;
  }

  RunConfig model_config() const {
    require(!common.config.empty(), command + " needs --config with a [model] section");
    return config();
  }

  ColumnarReport report(std::vector<std::string> columns, const RunConfig& cfg) const {
    ColumnarReport r(std::move(columns));
    r.set_meta("toolkit", "tgate " + std::string(kToolkitVersion));
    r.set_meta("command", command);
    r.set_meta("seed", std::to_string(cfg.seed));
    return r;
  }

  void emit(const ColumnarReport& r, const RunConfig& cfg) const {
    if (cfg.out) write_report(std::filesystem::path(*cfg.out), r);
    else write_report(out, r);
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master random seed (overrides [io] seed)");
  app->add_option("--out", c.out, "output file (default: [io] out, else stdout)");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
}

void set_gate_meta(ColumnarReport& r, const GateWindow& g) {
  r.set_meta("gate_start_ns", g.t_start());
  r.set_meta("gate_end_ns", g.t_end());
}

std::optional<GateWindow> read_gate_meta(const ColumnarReport& r) {
  const auto* s = r.meta("gate_start_ns");
  const auto* e = r.meta("gate_end_ns");
  if (!s || !e) return std::nullopt;
  return GateWindow(parse_double(*s, 0), parse_double(*e, 0));
}

void cmd_simulate(const Context& ctx, const std::string& channel_name, std::optional<double> freq,
                  double integration, bool sample) {
  const RunConfig cfg = ctx.model_config();
  const auto model = cfg.resolved_model();
  const Channel channel = parse_channel(channel_name);
  SpinState spin = Spin::ms0;
  if (channel == Channel::mw_on) {
    double p = cfg.sweep.c_sat;
    if (freq) p = std::min(1.0, LorentzianDoublet{1.0, cfg.odmr.dips}.dip_fraction(*freq));
    spin = SpinState::mixed(p);
  }
  require(!freq || channel == Channel::mw_on, "--freq needs --channel mw_on");
  const ExpectedHistogram expected =
      histogram_expectation(model, spin, cfg.train(), cfg.bin_width, integration, channel);
  std::ostringstream os;
  if (sample) {
    CountHistogram h = sample_histogram(expected, cfg.seed);
    h.mw_frequency = freq;
    write_histogram(os, h);
  } else {
    ExpectedHistogram h = expected;
    h.mw_frequency = freq;
    write_histogram(os, h);
  }
  if (cfg.out) atomic_write(*cfg.out, os.str());
  else ctx.out << os.str();
}

void cmd_gate_sweep(const Context& ctx) {
  const RunConfig cfg = ctx.model_config();
  const auto rep = sweep_gate(cfg.resolved_model(), cfg.train(), cfg.sweep);
  std::vector<std::string> cols = {"tau_c_ns", "n0", "n1", "contrast", "shot_noise", "snr", "ef"};
  if (rep.eta) cols.push_back("eta");
  ColumnarReport r = ctx.report(cols, cfg);
  r.set_meta("rep_rate_hz", cfg.rep_rate);
  r.set_meta("optimal_tau_c_ns", rep.tau_c[rep.optimum]);
  r.set_meta("ef_at_optimum", rep.ef[rep.optimum]);
  r.rows.resize(rep.tau_c.size(), static_cast<Eigen::Index>(cols.size()));
  r.rows << rep.tau_c, rep.n0, rep.n1, rep.contrast, rep.shot_noise, rep.snr, rep.ef;
  if (rep.eta) r.rows.col(7) = *rep.eta;
  ctx.emit(r, cfg);
}

void cmd_rep_sweep(const Context& ctx) {
  const RunConfig cfg = ctx.model_config();
  const auto rep = sweep_rep_rate(cfg.resolved_model(), cfg.sweep);
  std::vector<std::string> cols = {"rate_hz", "period_ns", "tau_c_ns", "snr_ungated", "snr_gated"};
  if (rep.eta_gated) {
    cols.push_back("eta_ungated");
    cols.push_back("eta_gated");
  }
  ColumnarReport r = ctx.report(cols, cfg);
  r.set_meta("power_mode", std::string(to_string(rep.mode)));
  r.set_meta("optimal_rate_hz", rep.rate[rep.optimum]);
  r.set_meta("optimal_period_ns", 1e9 / rep.rate[rep.optimum]);
  r.rows.resize(rep.rate.size(), static_cast<Eigen::Index>(cols.size()));
  r.rows.col(0) = rep.rate;
  r.rows.col(1) = rep.rate.cwiseInverse() * 1e9;
  r.rows.col(2) = rep.tau_c;
  r.rows.col(3) = rep.snr_ungated;
  r.rows.col(4) = rep.snr_gated;
  if (rep.eta_gated) {
    r.rows.col(5) = *rep.eta_ungated;
    r.rows.col(6) = *rep.eta_gated;
  }
  ctx.emit(r, cfg);
}

void cmd_joint_opt(const Context& ctx) {
  const RunConfig cfg = ctx.model_config();
  const auto best = joint_optimum(cfg.resolved_model(), cfg.sweep);
  ColumnarReport r = ctx.report({"tau_c_ns", "rate_hz", "period_ns", "snr"}, cfg);
  r.set_meta("power_mode", std::string(to_string(cfg.sweep.power_mode)));
  r.add_row({best.tau_c, best.rate, 1e9 / best.rate, best.snr});
  ctx.emit(r, cfg);
}

void cmd_mc(const Context& ctx, std::optional<std::size_t> trials) {
  RunConfig cfg = ctx.model_config();
  if (trials) cfg.mc.trials = *trials;
  const auto dist = mc_snr_distribution(cfg.resolved_model(), cfg.gate(), cfg.train(), cfg.mc, cfg.seed);
  ColumnarReport r = ctx.report({"trial", "snr"}, cfg);
  set_gate_meta(r, cfg.gate());
  r.set_meta("trials", std::to_string(cfg.mc.trials));
  r.set_meta("snr_mean", dist.mean);
  r.set_meta("snr_stddev", dist.stddev);
  r.set_meta("snr_analytic", dist.analytic);
  const Eigen::Index n = dist.samples.size();
  r.rows.resize(n, 2);
  r.rows.col(0) = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  r.rows.col(1) = dist.samples;
  ctx.emit(r, cfg);
}

ColumnarReport spectrum_report(const Context& ctx, const OdmrSpectrum& s, const RunConfig& cfg) {
  ColumnarReport r = ctx.report({"freq_hz", "counts"}, cfg);
  r.set_meta("integration_s", s.integration_per_point);
  if (s.gate) set_gate_meta(r, *s.gate);
  r.rows.resize(s.freqs.size(), 2);
  r.rows << s.freqs, s.counts;
  return r;
}

void cmd_odmr_synth(const Context& ctx, bool ungated, bool sample) {
  const RunConfig cfg = ctx.model_config();
  const PulseTrain train = cfg.train();
  const GateWindow gate = ungated ? GateWindow(0.0, train.period()) : cfg.gate();
  const auto s = synth_odmr(cfg.resolved_model(), train, gate, cfg.odmr.frequencies(),
                            cfg.odmr.dips, cfg.odmr.integration_per_point,
                            sample ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
  ctx.emit(spectrum_report(ctx, s, cfg), cfg);
}

void cmd_odmr_fit(const Context& ctx, const std::string& input, std::optional<int> max_iter) {
  RunConfig cfg = ctx.config();
  if (max_iter) cfg.odmr.fit.max_iterations = *max_iter;
  const ColumnarReport in = read_report(std::filesystem::path(input));
  OdmrSpectrum s;
  s.freqs = in.column("freq_hz");
  s.counts = in.column("counts");
  if (const auto* t = in.meta("integration_s")) s.integration_per_point = parse_double(*t, 0);
  s.gate = read_gate_meta(in);

  ColumnarReport r = ctx.report({"dip", "center_hz", "fwhm_hz", "depth"}, cfg);
  try {
    const DoubletFit fit = fit_double_lorentzian(s, cfg.odmr.fit);
    const auto& p = fit.params;
    r.set_meta("baseline", p.baseline);
    r.set_meta("residual_norm", fit.residual_norm);
    r.set_meta("iterations", std::to_string(fit.iterations));
    const auto& deep = p.deeper();
    r.set_meta("contrast", deep.depth);
    r.set_meta("linewidth_hz", deep.fwhm);
    if (s.integration_per_point > 0.0 && deep.depth > 0.0) {
      const RatePair rates{p.baseline / s.integration_per_point,
                           p.baseline * (1.0 - deep.depth) / s.integration_per_point};
      r.set_meta("eta_t_per_sqrt_hz", sensitivity_from_fit(p, rates, cfg.sweep.constants));
    }
    for (int k = 0; k < 2; ++k)
      r.add_row({static_cast<double>(k), p.dips[k].center, p.dips[k].fwhm, p.dips[k].depth});
  } catch (const FitError& e) {
    const auto& p = e.last_iterate();
    std::ostringstream os;
    os << e.what() << "; last iterate: baseline=" << format_double(p.baseline);
    for (int k = 0; k < 2; ++k)
      os << " dip" << k << "=(" << format_double(p.dips[k].center) << ", "
         << format_double(p.dips[k].fwhm) << ", " << format_double(p.dips[k].depth) << ")";
    throw NumericError(os.str());
  }
  ctx.emit(r, cfg);
}

void cmd_gate_apply(const Context& ctx, const std::vector<std::string>& files,
                    std::optional<double> start, std::optional<double> end) {
  const RunConfig cfg = ctx.config();
  require(!files.empty(), "gate-apply needs at least one histogram file");
  std::vector<CountHistogram> hists;
  std::vector<double> freqs;
  for (const auto& f : files) {
    hists.push_back(read_histogram<std::int64_t>(std::filesystem::path(f)));
    require(hists.back().mw_frequency.has_value(), "histogram '" + f + "' has no freq_hz metadata");
    freqs.push_back(*hists.back().mw_frequency);
  }
  // Spectra must be ordered by frequency; sort histograms alongside.
  std::vector<std::size_t> order(hists.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return freqs[a] < freqs[b]; });
  std::vector<CountHistogram> sorted_h;
  std::vector<double> sorted_f;
  for (auto i : order) {
    sorted_h.push_back(hists[i]);
    sorted_f.push_back(freqs[i]);
  }
  const double period = sorted_h.front().period();
  const GateWindow gate(start.value_or(cfg.gate_start), end.value_or(cfg.gate_end.value_or(period)));
  const auto s = gate_measured_odmr(sorted_h, sorted_f, gate);
  ctx.emit(spectrum_report(ctx, s, cfg), cfg);
}

void cmd_hw_sim(const Context& ctx, const std::string& events_path, const std::string& format) {
  const RunConfig cfg = ctx.model_config();
  const PulseTrain train = cfg.train();
  HwGateConfig hw = cfg.hw.gate;
  if (hw.gate_length <= 0.0) {
    const GateWindow g = cfg.gate();
    hw.trigger_delay = g.t_start();
    hw.gate_length = g.t_end() - g.t_start();
  }
  hw.validate(train);
  const auto events = simulate_events(cfg.resolved_model(), train, cfg.hw.events, cfg.seed);
  const auto hw_kept = hw_gate(events, train, hw, derive_seed(cfg.seed, {1}));
  const GateWindow offline(hw.trigger_delay, hw.trigger_delay + hw.gate_length);
  const auto off_kept = offline_gate(events, train, offline);

  ColumnarReport r = ctx.report({"channel", "events", "hw_gated", "offline_gated"}, cfg);
  r.set_meta("trigger_delay_ns", hw.trigger_delay);
  r.set_meta("gate_length_ns", hw.gate_length);
  r.set_meta("jitter_sigma_ns", hw.jitter_sigma);
  r.set_meta("identical", hw_kept == off_kept ? "true" : "false");
  for (Channel c : {Channel::mw_off, Channel::mw_on}) {
    auto count = [c](const std::vector<PhotonEvent>& v) {
      return static_cast<double>(
          std::count_if(v.begin(), v.end(), [c](const PhotonEvent& e) { return e.channel == c; }));
    };
    r.add_row({static_cast<double>(c), count(events), count(hw_kept), count(off_kept)});
  }
  if (!events_path.empty())
    write_events(events_path, hw_kept, format == "binary" ? EventFormat::binary : EventFormat::text);
  ctx.emit(r, cfg);
}

void cmd_snr_map(const Context& ctx, const std::string& channel, std::optional<int> factor,
                 bool sample) {
  const RunConfig cfg = ctx.model_config();
  const auto scan = synth_scan(cfg.resolved_model(), cfg.train(), cfg.scan,
                               sample ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
  const int f = factor.value_or(cfg.interp_factor);
  const SnrMap map = snr_map(scan, parse_map_channel(channel), f);
  ColumnarReport r = ctx.report({"ix", "iy", "x_um", "y_um", "snr", "zero_total"}, cfg);
  r.set_meta("channel", channel);
  r.set_meta("factor", std::to_string(map.factor));
  r.set_meta("method", map.method);
  r.set_meta("pitch_um", scan.pitch);
  r.set_meta("dwell_s", scan.dwell);
  const Eigen::Index rows = map.values.rows();
  const Eigen::Index cols = map.values.cols();
  r.rows.resize(rows * cols, 6);
  const double step = scan.pitch / f;
  for (Eigen::Index iy = 0; iy < rows; ++iy) {
    for (Eigen::Index ix = 0; ix < cols; ++ix) {
      const Eigen::Index k = iy * cols + ix;
      r.rows.row(k) << static_cast<double>(ix), static_cast<double>(iy),
          static_cast<double>(ix) * step, static_cast<double>(iy) * step, map.values(iy, ix),
          map.zero_total(iy / f, ix / f) ? 1.0 : 0.0;
    }
  }
  ctx.emit(r, cfg);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-gated photon counting toolkit for NV-center spin readout", "tgate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tgate " + std::string(kToolkitVersion));

  Common common;
  std::function<void(const Context&)> action;
  std::string command;
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, common);
    s->callback([&, name] { command = name; });
    return s;
  };

  std::string channel = "mw_off";
  std::optional<double> freq;
  double integration = 1.0;
  bool sample = false;
  auto* simulate = sub("simulate", "expected or sampled TCSPC histogram of one channel");
  simulate->add_option("--channel", channel, "mw_off or mw_on");
  simulate->add_option("--freq", freq, "MW frequency in Hz (mixes the [odmr] dips)");
  simulate->add_option("--integration", integration, "accumulation time in s");
  simulate->add_flag("--sample", sample, "Poisson-sample the histogram with the seed");

  sub("gate-sweep", "SNR, contrast and EF versus gate onset");
  sub("rep-sweep", "gated and ungated SNR versus repetition rate");
  sub("joint-opt", "joint optimum of gate onset and repetition rate");

  std::optional<std::size_t> trials;
  auto* mc = sub("mc", "Monte-Carlo distribution of the gated SNR");
  mc->add_option("--trials", trials, "number of trials");

  bool ungated = false;
  auto* synth = sub("odmr-synth", "synthetic CW-ODMR spectrum");
  synth->add_flag("--ungated", ungated, "open the gate over the full period");
  synth->add_flag("--sample", sample, "Poisson-sample the spectrum with the seed");

  std::string spectrum;
  std::optional<int> max_iter;
  auto* fit = sub("odmr-fit", "double-Lorentzian fit of a spectrum file");
  fit->add_option("spectrum", spectrum, "spectrum report (freq_hz,counts)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--max-iter", max_iter, "iteration limit of the fit")->check(CLI::PositiveNumber);

  std::vector<std::string> histograms;
  std::optional<double> gate_start;
  std::optional<double> gate_end;
  auto* apply = sub("gate-apply", "gate per-frequency histograms into a spectrum");
  apply->add_option("histograms", histograms, "histogram files with freq_hz metadata")
      ->required()
      ->check(CLI::ExistingFile);
  apply->add_option("--gate-start", gate_start, "gate start in ns");
  apply->add_option("--gate-end", gate_end, "gate end in ns");

  std::string events_path;
  std::string format = "text";
  auto* hw = sub("hw-sim", "photon-stream simulation through the hardware gate");
  hw->add_option("--events", events_path, "write the hardware-gated events here");
  hw->add_option("--format", format, "event file format")->check(CLI::IsMember({"text", "binary"}));

  std::string map_channel = "gated";
  std::optional<int> factor;
  auto* map = sub("snr-map", "per-pixel SNR map of a synthetic scan");
  map->add_option("--channel", map_channel, "gated or ungated")
      ->check(CLI::IsMember({"gated", "ungated"}));
  map->add_option("--factor", factor, "bicubic upsampling factor")->check(CLI::Range(1, 64));
  map->add_flag("--sample", sample, "Poisson-sample the scan with the seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    if (code == 0) return 0;
    const auto picked = app.get_subcommands();
    err << (picked.empty() ? app.help() : picked.front()->help());
    return kExitUsage;
  }

  const Context ctx{common, out, command};
  try {
    if (command == "simulate") cmd_simulate(ctx, channel, freq, integration, sample);
    else if (command == "gate-sweep") cmd_gate_sweep(ctx);
    else if (command == "rep-sweep") cmd_rep_sweep(ctx);
    else if (command == "joint-opt") cmd_joint_opt(ctx);
    else if (command == "mc") cmd_mc(ctx, trials);
    else if (command == "odmr-synth") cmd_odmr_synth(ctx, ungated, sample);
    else if (command == "odmr-fit") cmd_odmr_fit(ctx, spectrum, max_iter);
    else if (command == "gate-apply") cmd_gate_apply(ctx, histograms, gate_start, gate_end);
    else if (command == "hw-sim") cmd_hw_sim(ctx, events_path, format);
    else if (command == "snr-map") cmd_snr_map(ctx, map_channel, factor, sample);
  } catch (const ValidationError& e) {
    err << "tgate " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "tgate " << command << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "tgate " << command << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}

}  // namespace tgate

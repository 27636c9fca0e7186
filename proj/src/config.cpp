#include "tgate/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "tgate/io.hpp"

namespace tgate {

Eigen::VectorXd OdmrSettings::frequencies() const {
  require(points >= 2, "ODMR scan needs at least two points");
  require(freq_stop > freq_start, "ODMR scan needs freq_stop > freq_start");
  return Eigen::VectorXd::LinSpaced(points, freq_start, freq_stop);
}

GateWindow RunConfig::gate() const {
  return GateWindow(gate_start, gate_end.value_or(train().period()));
}

FluorescenceModel RunConfig::resolved_model() const {
  require(!(background_ratio && ungated_contrast),
          "background_ratio and ungated_contrast are mutually exclusive");
  FluorescenceModel m = model;
  m.validate();
  const PulseTrain t = train();
  if (background_ratio) m = with_background_ratio(std::move(m), *background_ratio, ratio_kind, t);
  if (ungated_contrast) m = with_ungated_contrast(std::move(m), t, sweep, *ungated_contrast);
  if (total_rate) m = with_total_rate(std::move(m), t, sweep, *total_rate);
  return m;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(',', pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

struct Entry {
  std::string value;
  std::size_t line;
};

class Reader {
 public:
  Reader(std::string section, std::string key, const Entry& e)
      : name_("[" + section + "] " + key), e_(e) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(e_.line, name_ + ": " + msg);
  }

  double number(std::string_view text) const {
    try {
      return parse_double(text, e_.line);
    } catch (const ParseError&) {
      fail("expected a number, got '" + std::string(text) + "'");
    }
  }
  double number() const { return number(e_.value); }
  double positive() const {
    const double v = number();
    if (!(v > 0.0) || !std::isfinite(v)) fail("must be a finite number > 0");
    return v;
  }
  double non_negative() const {
    const double v = number();
    if (!(v >= 0.0) || !std::isfinite(v)) fail("must be a finite number >= 0");
    return v;
  }
  std::int64_t integer() const {
    std::int64_t v = 0;
    const auto* end = e_.value.data() + e_.value.size();
    const auto [ptr, ec] = std::from_chars(e_.value.data(), end, v);
    if (ec != std::errc{} || ptr != end || e_.value.empty())
      fail("expected an integer, got '" + e_.value + "'");
    return v;
  }
  std::vector<double> numbers(std::size_t min_count) const {
    std::vector<double> out;
    for (auto f : split_list(e_.value)) out.push_back(number(f));
    if (out.size() < min_count) fail("expected at least " + std::to_string(min_count) + " values");
    return out;
  }
  std::vector<std::string_view> fields(std::size_t min_count, std::size_t max_count) const {
    auto f = split_list(e_.value);
    if (f.size() < min_count || f.size() > max_count)
      fail("expected " + std::to_string(min_count) +
           (min_count == max_count ? "" : "-" + std::to_string(max_count)) +
           " comma-separated fields");
    return f;
  }
  const std::string& text() const { return e_.value; }
  template <typename F>
  auto checked(F&& f) const {
    try {
      return f();
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }

 private:
  std::string name_;
  const Entry& e_;
};

using Handler = std::function<void(const Reader&)>;

struct Schema {
  std::map<std::string, std::map<std::string, Handler>> sections;
  std::set<std::pair<std::string, std::string>> repeatable;
};

DecayComponent component(const Reader& r) {
  const auto f = r.fields(2, 3);
  DecayComponent c{r.number(f[0]), r.number(f[1]), f.size() > 2 ? std::string(f[2]) : ""};
  r.checked([&] {
    c.validate();
    return 0;
  });
  return c;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  cfg.model.spin0.clear();
  int dip_count = 0;
  Schema s;
  auto& model = s.sections["model"];
  model["dark_rate"] = [&](const Reader& r) { cfg.model.dark_rate = r.non_negative() * 1e-9; };
  model["irf_sigma"] = [&](const Reader& r) { cfg.model.irf_sigma = r.non_negative(); };
  model["pulse_time"] = [&](const Reader& r) { cfg.model.pulse_time = r.non_negative(); };
  model["c_sat"] = [&](const Reader& r) {
    const double v = r.number();
    if (!(v >= 0.0 && v <= 1.0)) r.fail("must lie in [0, 1]");
    cfg.sweep.c_sat = cfg.mc.c_sat = cfg.hw.events.c_sat = cfg.scan.c_sat = v;
  };
  model["background_ratio"] = [&](const Reader& r) { cfg.background_ratio = r.non_negative(); };
  model["ratio_kind"] = [&](const Reader& r) {
    if (r.text() == "amplitude") cfg.ratio_kind = RatioKind::amplitude;
    else if (r.text() == "integrated") cfg.ratio_kind = RatioKind::integrated;
    else r.fail("expected 'amplitude' or 'integrated'");
  };
  model["ungated_contrast"] = [&](const Reader& r) {
    const double v = r.number();
    if (!(v > 0.0 && v < 1.0)) r.fail("must lie in (0, 1)");
    cfg.ungated_contrast = v;
  };
  model["total_rate"] = [&](const Reader& r) { cfg.total_rate = r.positive(); };
  s.sections["model.spin0"]["component"] = [&](const Reader& r) {
    cfg.model.spin0.push_back(component(r));
  };
  s.sections["model.spin1"]["component"] = [&](const Reader& r) {
    cfg.model.spin1.push_back(component(r));
  };
  s.sections["model.background"]["component"] = [&](const Reader& r) {
    cfg.model.background.push_back(component(r));
  };
  for (auto sec : {"model.spin0", "model.spin1", "model.background"})
    s.repeatable.insert({sec, "component"});

  auto& train = s.sections["train"];
  train["rep_rate"] = [&](const Reader& r) { cfg.rep_rate = r.positive(); };
  train["reference_rate"] = [&](const Reader& r) { cfg.sweep.reference_rate = r.positive(); };
  train["power_mode"] = [&](const Reader& r) {
    cfg.sweep.power_mode = r.checked([&] { return parse_power_mode(r.text()); });
  };
  train["tail"] = [&](const Reader& r) {
    if (r.text() == "truncated") cfg.sweep.tail = TailMode::truncated;
    else if (r.text() == "folded") cfg.sweep.tail = TailMode::folded;
    else r.fail("expected 'truncated' or 'folded'");
  };

  auto& sweep = s.sections["sweep"];
  sweep["integration_time"] = [&](const Reader& r) { cfg.sweep.integration_time = r.positive(); };
  sweep["mw_duty"] = [&](const Reader& r) {
    const double v = r.number();
    if (!(v > 0.0 && v < 1.0)) r.fail("must lie in (0, 1)");
    cfg.sweep.mw_duty = cfg.mc.mw_duty = cfg.scan.mw_duty = v;
  };
  sweep["tau_c_step"] = [&](const Reader& r) { cfg.sweep.tau_c_step = r.positive(); };
  sweep["tau_c_max_fraction"] = [&](const Reader& r) {
    const double v = r.number();
    if (!(v > 0.0 && v < 1.0)) r.fail("must lie in (0, 1)");
    cfg.sweep.tau_c_max_fraction = v;
  };
  sweep["tau_c_grid"] = [&](const Reader& r) { cfg.sweep.tau_c_grid = r.numbers(1); };
  sweep["tau_c"] = [&](const Reader& r) { cfg.sweep.fixed_tau_c = r.non_negative(); };
  sweep["rates"] = [&](const Reader& r) { cfg.sweep.rate_grid = r.numbers(1); };
  sweep["period_grid"] = [&](const Reader& r) {
    const auto v = r.numbers(3);
    if (v.size() != 3 || !(v[0] > 0.0) || !(v[1] >= v[0]) || !(v[2] > 0.0))
      r.fail("expected start,stop,step in ns with 0 < start <= stop and step > 0");
    cfg.sweep.rate_grid.clear();
    const auto n = static_cast<long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
    for (long k = 0; k <= n; ++k) cfg.sweep.rate_grid.push_back(1e9 / (v[0] + static_cast<double>(k) * v[2]));
  };
  sweep["linewidth"] = [&](const Reader& r) { cfg.sweep.linewidth = r.positive(); };
  sweep["threads"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 0) r.fail("must be >= 0");
    cfg.sweep.threads = cfg.mc.threads = static_cast<unsigned>(v);
  };

  auto& gate = s.sections["gate"];
  gate["start"] = [&](const Reader& r) { cfg.gate_start = r.non_negative(); };
  gate["end"] = [&](const Reader& r) { cfg.gate_end = r.positive(); };

  auto& mc = s.sections["mc"];
  mc["trials"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 2) r.fail("must be >= 2");
    cfg.mc.trials = static_cast<std::size_t>(v);
  };
  mc["integration_time"] = [&](const Reader& r) { cfg.mc.integration_time = r.positive(); };

  auto& odmr = s.sections["odmr"];
  odmr["freq_start"] = [&](const Reader& r) { cfg.odmr.freq_start = r.positive(); };
  odmr["freq_stop"] = [&](const Reader& r) { cfg.odmr.freq_stop = r.positive(); };
  odmr["points"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 7) r.fail("must be >= 7");
    cfg.odmr.points = static_cast<int>(v);
  };
  odmr["integration_per_point"] = [&](const Reader& r) {
    cfg.odmr.integration_per_point = r.positive();
  };
  odmr["dip"] = [&](const Reader& r) {
    if (dip_count >= 2) r.fail("at most two dips");
    const auto f = r.fields(3, 3);
    LorentzianDip d{r.number(f[0]), r.number(f[1]), r.number(f[2])};
    if (!(d.fwhm > 0.0) || !(d.depth >= 0.0 && d.depth < 1.0))
      r.fail("dip needs fwhm > 0 and depth in [0, 1)");
    cfg.odmr.dips[static_cast<std::size_t>(dip_count++)] = d;
  };
  s.repeatable.insert({"odmr", "dip"});
  odmr["max_iter"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 1) r.fail("must be >= 1");
    cfg.odmr.fit.max_iterations = static_cast<int>(v);
  };
  odmr["relative_tolerance"] = [&](const Reader& r) { cfg.odmr.fit.relative_tolerance = r.positive(); };

  auto& hw = s.sections["hw"];
  hw["trigger_delay"] = [&](const Reader& r) { cfg.hw.gate.trigger_delay = r.non_negative(); };
  hw["gate_length"] = [&](const Reader& r) { cfg.hw.gate.gate_length = r.positive(); };
  hw["jitter_sigma"] = [&](const Reader& r) { cfg.hw.gate.jitter_sigma = r.non_negative(); };
  hw["integration_time"] = [&](const Reader& r) { cfg.hw.events.integration_time = r.positive(); };
  hw["toggle_rate"] = [&](const Reader& r) { cfg.hw.events.mw_toggle_rate = r.positive(); };

  auto& scan = s.sections["scan"];
  scan["nx"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 1) r.fail("must be >= 1");
    cfg.scan.nx = v;
  };
  scan["ny"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 1) r.fail("must be >= 1");
    cfg.scan.ny = v;
  };
  scan["pitch"] = [&](const Reader& r) { cfg.scan.pitch = r.positive(); };
  scan["dwell"] = [&](const Reader& r) { cfg.scan.dwell = r.positive(); };
  scan["tau_c"] = [&](const Reader& r) { cfg.scan.tau_c = r.non_negative(); };
  scan["interp_factor"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 1 || v > 64) r.fail("must lie in [1, 64]");
    cfg.interp_factor = static_cast<int>(v);
  };
  scan["emitter"] = [&](const Reader& r) {
    const auto f = r.fields(4, 4);
    Emitter e{r.number(f[0]), r.number(f[1]), r.number(f[2]), r.number(f[3])};
    if (!(e.width > 0.0) || !(e.brightness >= 0.0)) r.fail("emitter needs width > 0, brightness >= 0");
    cfg.scan.emitters.push_back(e);
  };
  s.repeatable.insert({"scan", "emitter"});

  auto& io = s.sections["io"];
  io["seed"] = [&](const Reader& r) {
    const auto v = r.integer();
    if (v < 0) r.fail("must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  };
  io["bin_width"] = [&](const Reader& r) { cfg.bin_width = cfg.mc.bin_width = r.positive(); };
  io["out"] = [&](const Reader& r) {
    if (r.text().empty()) r.fail("must not be empty");
    cfg.out = r.text();
  };

  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = trim(line);
    if (const auto hash = text.find(" #"); hash != std::string_view::npos) text = trim(text.substr(0, hash));
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(lineno, "malformed section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      if (!s.sections.count(section)) throw ConfigError(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string key(trim(text.substr(0, eq)));
    if (section.empty()) throw ConfigError(lineno, "key '" + key + "' outside any section");
    const auto& handlers = s.sections.at(section);
    const auto h = handlers.find(key);
    if (h == handlers.end()) throw ConfigError(lineno, "unknown key '" + key + "' in [" + section + "]");
    if (!s.repeatable.count({section, key}) && !seen.insert({section, key}).second)
      throw ConfigError(lineno, "duplicate key '" + key + "' in [" + section + "]");
    const Entry entry{std::string(trim(text.substr(eq + 1))), lineno};
    h->second(Reader(section, key, entry));
  }
  if (dip_count == 1) throw ConfigError(lineno, "[odmr] needs two dip entries (or none)");

  auto check = [&](const char* where, auto&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      throw ConfigError(lineno, std::string(where) + ": " + e.what());
    }
  };
  check("[model]", [&] { cfg.model.validate(); });
  check("[train]", [&] { (void)cfg.train(); });
  check("[sweep]", [&] { cfg.sweep.validate(); });
  check("[gate]", [&] { (void)cfg.gate(); });
  check("[odmr]", [&] { (void)cfg.odmr.frequencies(); });
  check("[hw]", [&] {
    if (cfg.hw.gate.gate_length > 0.0) cfg.hw.gate.validate(cfg.train());
  });
  check("[scan]", [&] { cfg.scan.validate(); });
  check("[model]", [&] { (void)cfg.resolved_model(); });
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  return parse_config(is);
}

}  // namespace tgate

#include "tgate/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace tgate {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

// `# key=value` -> (key, value); nullopt for other lines.
std::optional<std::pair<std::string, std::string>> parse_meta(std::string_view line,
                                                              std::size_t lineno) {
  if (line.empty() || line.front() != '#') return std::nullopt;
  const auto body = trim(line.substr(1));
  const auto eq = body.find('=');
  if (eq == std::string_view::npos) throw ParseError(lineno, "metadata line lacks '='");
  const auto key = trim(body.substr(0, eq));
  if (key.empty()) throw ParseError(lineno, "metadata line has an empty key");
  return std::pair{std::string(key), std::string(trim(body.substr(eq + 1)))};
}

std::int64_t parse_int(std::string_view text, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw ParseError(line, "expected an integer, got '" + std::string(text) + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

std::string format_shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

double parse_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  std::string_view t = text;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc{} || ptr != end || t.empty())
    throw ParseError(line, "expected a number, got '" + std::string(text) + "'");
  return v;
}

ColumnarReport::ColumnarReport(std::vector<std::string> names)
    : columns(std::move(names)), rows(0, static_cast<Eigen::Index>(columns.size())) {}

void ColumnarReport::set_meta(std::string key, std::string value) {
  require(!key.empty() && key.find_first_of("=\n") == std::string::npos,
          "invalid metadata key '" + key + "'");
  require(value.find('\n') == std::string::npos, "metadata values must be single-line");
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(std::move(key), std::move(value));
}

void ColumnarReport::set_meta(std::string key, double value) {
  set_meta(std::move(key), format_double(value));
}

const std::string* ColumnarReport::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

void ColumnarReport::add_row(std::span<const double> values) {
  require(values.size() == columns.size(),
          "row has " + std::to_string(values.size()) + " values for " +
              std::to_string(columns.size()) + " columns");
  const Eigen::Index r = rows.rows();
  rows.conservativeResize(r + 1, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < values.size(); ++c) rows(r, static_cast<Eigen::Index>(c)) = values[c];
}

Eigen::VectorXd ColumnarReport::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), "report has no column '" + std::string(name) + "'");
  return rows.col(it - columns.begin());
}

void ColumnarReport::validate() const {
  require(!columns.empty(), "report needs at least one column");
  require(rows.cols() == static_cast<Eigen::Index>(columns.size()) || rows.rows() == 0,
          "report rows do not match its columns");
  for (const auto& c : columns)
    require(!c.empty() && c.find_first_of(",\n#") == std::string::npos,
            "invalid column name '" + c + "'");
}

void write_report(std::ostream& out, const ColumnarReport& report) {
  report.validate();
  for (const auto& [k, v] : report.metadata) out << "# " << k << '=' << v << '\n';
  for (std::size_t c = 0; c < report.columns.size(); ++c)
    out << (c ? "," : "") << report.columns[c];
  out << '\n';
  for (Eigen::Index r = 0; r < report.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < report.rows.cols(); ++c)
      out << (c ? "," : "") << format_double(report.rows(r, c));
    out << '\n';
  }
}

ColumnarReport read_report(std::istream& in) {
  ColumnarReport report;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!have_header) {
      if (auto kv = parse_meta(text, lineno)) {
        report.metadata.push_back(std::move(*kv));
        continue;
      }
      for (auto name : split(text, ',')) {
        if (name.empty()) throw ParseError(lineno, "empty column name");
        report.columns.emplace_back(name);
      }
      report.rows.resize(0, static_cast<Eigen::Index>(report.columns.size()));
      have_header = true;
      continue;
    }
    if (text.front() == '#') throw ParseError(lineno, "metadata after the column header");
    const auto fields = split(text, ',');
    if (fields.size() != report.columns.size())
      throw ParseError(lineno, "ragged row: " + std::to_string(fields.size()) + " fields for " +
                                   std::to_string(report.columns.size()) + " columns");
    values.clear();
    for (auto f : fields) values.push_back(parse_double(f, lineno));
    report.add_row(values);
  }
  if (!have_header) throw ParseError(lineno + 1, "report has no column header");
  return report;
}

void write_report(const std::filesystem::path& path, const ColumnarReport& report) {
  std::ostringstream os;
  write_report(os, report);
  atomic_write(path, os.str());
}

ColumnarReport read_report(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  return read_report(is);
}

namespace {

template <typename Scalar>
std::string format_count(Scalar v) {
  if constexpr (std::is_integral_v<Scalar>)
    return std::to_string(v);
  else
    return format_shortest(v);
}

template <typename Scalar>
Scalar parse_count(std::string_view text, std::size_t line) {
  if constexpr (std::is_integral_v<Scalar>)
    return parse_int(text, line);
  else
    return parse_double(text, line);
}

}  // namespace

template <typename Scalar>
void write_histogram(std::ostream& out, const Histogram<Scalar>& h) {
  h.validate();
  out << "# bin_width_ns=" << format_shortest(h.bin_width) << '\n'
      << "# rep_rate_hz=" << format_shortest(h.rep_rate) << '\n'
      << "# integration_s=" << format_shortest(h.integration_time) << '\n'
      << "# channel=" << to_string(h.channel) << '\n';
  if (h.mw_frequency) out << "# freq_hz=" << format_shortest(*h.mw_frequency) << '\n';
  for (Eigen::Index b = 0; b < h.size(); ++b)
    out << format_shortest(h.bin_start(b)) << ',' << format_count(h.counts[b]) << '\n';
}

template <typename Scalar>
Histogram<Scalar> read_histogram(std::istream& in) {
  std::map<std::string, std::pair<std::string, std::size_t>> meta;
  std::vector<Scalar> counts;
  std::vector<double> starts;
  std::size_t first_data_line = 0;
  std::string line;
  std::size_t lineno = 0;
  static const std::array<std::string_view, 5> known = {"bin_width_ns", "rep_rate_hz",
                                                        "integration_s", "channel", "freq_hz"};
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (auto kv = parse_meta(text, lineno)) {
      if (first_data_line) throw ParseError(lineno, "metadata after histogram data");
      if (std::find(known.begin(), known.end(), kv->first) == known.end())
        throw ParseError(lineno, "unknown histogram metadata key '" + kv->first + "'");
      if (meta.count(kv->first))
        throw ParseError(lineno, "duplicate metadata key '" + kv->first + "'");
      meta[kv->first] = {kv->second, lineno};
      continue;
    }
    if (!first_data_line) first_data_line = lineno;
    const auto fields = split(text, ',');
    if (fields.size() != 2) throw ParseError(lineno, "expected 'bin_start_ns,counts'");
    const double start = parse_double(fields[0], lineno);
    if (!starts.empty() && !(start > starts.back()))
      throw ParseError(lineno, "bin starts are not strictly increasing");
    const Scalar c = parse_count<Scalar>(fields[1], lineno);
    if (!(c >= Scalar(0))) throw ParseError(lineno, "negative count");
    starts.push_back(start);
    counts.push_back(c);
  }
  const std::size_t end_line = first_data_line ? first_data_line : lineno + 1;
  for (auto key : {"bin_width_ns", "rep_rate_hz", "integration_s", "channel"})
    if (!meta.count(key)) throw ParseError(end_line, std::string("missing metadata '") + key + "'");
  if (counts.empty()) throw ParseError(end_line, "histogram has no bins");

  auto number = [&](const std::string& key) {
    const auto& [text, at] = meta.at(key);
    return parse_double(text, at);
  };
  Histogram<Scalar> h;
  h.bin_width = number("bin_width_ns");
  h.rep_rate = number("rep_rate_hz");
  h.integration_time = number("integration_s");
  try {
    h.channel = parse_channel(meta.at("channel").first);
  } catch (const ValidationError& e) {
    throw ParseError(meta.at("channel").second, e.what());
  }
  if (meta.count("freq_hz")) h.mw_frequency = number("freq_hz");
  if (!(h.bin_width > 0.0)) throw ParseError(meta.at("bin_width_ns").second, "bin width must be > 0");
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const double expected = static_cast<double>(b) * h.bin_width;
    if (std::abs(starts[b] - expected) > 1e-9 * std::max(h.bin_width, std::abs(expected)))
      throw ParseError(first_data_line + b, "bin start does not match bin_width_ns");
  }
  h.counts = Eigen::Map<const typename Histogram<Scalar>::Vector>(
      counts.data(), static_cast<Eigen::Index>(counts.size()));
  try {
    h.validate();
  } catch (const ValidationError& e) {
    throw ParseError(end_line, e.what());
  }
  return h;
}

template <typename Scalar>
void write_histogram(const std::filesystem::path& path, const Histogram<Scalar>& h) {
  std::ostringstream os;
  write_histogram(os, h);
  atomic_write(path, os.str());
}

template <typename Scalar>
Histogram<Scalar> read_histogram(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  return read_histogram<Scalar>(is);
}

template void write_histogram(std::ostream&, const CountHistogram&);
template void write_histogram(std::ostream&, const ExpectedHistogram&);
template CountHistogram read_histogram(std::istream&);
template ExpectedHistogram read_histogram(std::istream&);
template void write_histogram(const std::filesystem::path&, const CountHistogram&);
template void write_histogram(const std::filesystem::path&, const ExpectedHistogram&);
template CountHistogram read_histogram(const std::filesystem::path&);
template ExpectedHistogram read_histogram(const std::filesystem::path&);

namespace {

constexpr std::array<char, 4> kEventMagic = {'T', 'G', 'E', 'V'};
constexpr std::uint32_t kEventVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw ValidationError("truncated binary event file");
  std::array<unsigned char, sizeof(T)> bits{};
  std::memcpy(bits.data(), in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  pos += sizeof(T);
  return std::bit_cast<T>(bits);
}

void check_events(std::span<const PhotonEvent> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    require(std::isfinite(events[i].timestamp) && events[i].timestamp >= 0.0,
            "event timestamps must be finite and >= 0");
    require(i == 0 || events[i].timestamp >= events[i - 1].timestamp,
            "events must be sorted by timestamp");
  }
}

}  // namespace

void write_events(const std::filesystem::path& path, std::span<const PhotonEvent> events,
                  EventFormat format) {
  check_events(events);
  if (format == EventFormat::text) {
    ColumnarReport r({"timestamp_ns", "channel"});
    r.set_meta("toolkit", "tgate " + std::string(kToolkitVersion));
    r.set_meta("events", std::to_string(events.size()));
    r.rows.resize(static_cast<Eigen::Index>(events.size()), 2);
    for (std::size_t i = 0; i < events.size(); ++i) {
      r.rows(static_cast<Eigen::Index>(i), 0) = events[i].timestamp;
      r.rows(static_cast<Eigen::Index>(i), 1) = static_cast<double>(events[i].channel);
    }
    write_report(path, r);
    return;
  }
  std::string out;
  out.reserve(16 + events.size() * 9);
  out.append(kEventMagic.data(), kEventMagic.size());
  put_le(out, kEventVersion);
  put_le(out, static_cast<std::uint64_t>(events.size()));
  for (const auto& e : events) {
    put_le(out, e.timestamp);
    put_le(out, static_cast<std::uint8_t>(e.channel));
  }
  atomic_write(path, out);
}

std::vector<PhotonEvent> read_events(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::vector<PhotonEvent> events;
  auto to_channel = [](double v) {
    if (v == 0.0) return Channel::mw_off;
    if (v == 1.0) return Channel::mw_on;
    throw ValidationError("event channel must be 0 or 1");
  };
  if (data.size() >= 4 && std::equal(kEventMagic.begin(), kEventMagic.end(), data.begin())) {
    std::size_t pos = 4;
    const auto version = get_le<std::uint32_t>(data, pos);
    require(version == kEventVersion, "unsupported event file version " + std::to_string(version));
    const auto n = get_le<std::uint64_t>(data, pos);
    require(n <= (data.size() - pos) / 9, "truncated binary event file");
    events.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double t = get_le<double>(data, pos);
      const auto c = get_le<std::uint8_t>(data, pos);
      events.push_back({t, to_channel(c)});
    }
    require(pos == data.size(), "trailing bytes after binary event records");
  } else {
    std::istringstream is(data);
    const ColumnarReport r = read_report(is);
    const auto t = r.column("timestamp_ns");
    const auto c = r.column("channel");
    events.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) events.push_back({t[i], to_channel(c[i])});
  }
  check_events(events);
  return events;
}

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ValidationError("failed writing '" + path.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tgate

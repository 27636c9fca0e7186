#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tgate/acquisition.hpp"
#include "tgate/histogram.hpp"

namespace tgate {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Comma-separated table with `# key=value` metadata lines, a header line of
/// column names, and one line per row.
struct ColumnarReport {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  Eigen::MatrixXd rows;  // rows.cols() == columns.size()

  ColumnarReport() = default;
  explicit ColumnarReport(std::vector<std::string> names);

  void set_meta(std::string key, std::string value);
  void set_meta(std::string key, double value);
  const std::string* meta(std::string_view key) const;

  void add_row(std::span<const double> values);
  void add_row(std::initializer_list<double> values) {
    add_row(std::span<const double>(values.begin(), values.size()));
  }
  Eigen::VectorXd column(std::string_view name) const;
  void validate() const;

  friend bool operator==(const ColumnarReport& a, const ColumnarReport& b) {
    return a.metadata == b.metadata && a.columns == b.columns && a.rows.rows() == b.rows.rows() &&
           a.rows.cols() == b.rows.cols() && (a.rows.array() == b.rows.array()).all();
  }
};

/// 17 significant digits; inf and nan spelled as such.
std::string format_double(double v);
/// Shortest representation that parses back to the same double.
std::string format_shortest(double v);
double parse_double(std::string_view text, std::size_t line);

void write_report(std::ostream& out, const ColumnarReport& report);
ColumnarReport read_report(std::istream& in);
void write_report(const std::filesystem::path& path, const ColumnarReport& report);
ColumnarReport read_report(const std::filesystem::path& path);

template <typename Scalar>
void write_histogram(std::ostream& out, const Histogram<Scalar>& h);
template <typename Scalar>
Histogram<Scalar> read_histogram(std::istream& in);
template <typename Scalar>
void write_histogram(const std::filesystem::path& path, const Histogram<Scalar>& h);
template <typename Scalar>
Histogram<Scalar> read_histogram(const std::filesystem::path& path);

enum class EventFormat { text, binary };

/// Text: a report with columns timestamp_ns, channel (0 = MW off, 1 = MW on).
/// Binary: "TGEV", u32 version, u64 count, then per event an f64 timestamp and
/// a u8 channel, little-endian.
void write_events(const std::filesystem::path& path, std::span<const PhotonEvent> events,
                  EventFormat format);
std::vector<PhotonEvent> read_events(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tgate

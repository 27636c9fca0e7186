#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "tgate/error.hpp"

namespace tgate {

/// Detection channel of the microwave-toggled acquisition.
enum class Channel : std::uint8_t { mw_off = 0, mw_on = 1 };

std::string_view to_string(Channel channel);
Channel parse_channel(std::string_view text);

/// TCSPC histogram over one laser period. Scalar is std::int64_t for measured
/// or sampled counts and double for expectations.
template <typename Scalar>
struct Histogram {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  double bin_width = 0.1;  // ns
  Vector counts;
  Channel channel = Channel::mw_off;
  double integration_time = 0.0;  // s
  double rep_rate = 0.0;          // Hz
  std::optional<double> mw_frequency;  // Hz, set when the histogram belongs to an ODMR point

  double period() const { return 1e9 / rep_rate; }
  Eigen::Index size() const { return counts.size(); }
  double bin_start(Eigen::Index b) const { return static_cast<double>(b) * bin_width; }

  void validate() const {
    require(bin_width > 0.0 && std::isfinite(bin_width), "histogram bin width must be positive");
    require(rep_rate > 0.0 && std::isfinite(rep_rate), "histogram rep_rate must be positive");
    require(integration_time >= 0.0, "histogram integration time must be non-negative");
    require(counts.size() > 0, "histogram has no bins");
    require((counts.array() >= Scalar(0)).all(), "histogram counts must be non-negative");
    const double span = bin_width * static_cast<double>(counts.size());
    require(std::abs(span - period()) <= 1e-9 * period(),
            "histogram bins do not cover exactly one laser period");
  }

  Scalar total() const { return counts.sum(); }
};

using CountHistogram = Histogram<std::int64_t>;
using ExpectedHistogram = Histogram<double>;

/// Number of bins of width `bin_width` in `period`; throws unless the width
/// divides the period to 1e-9 relative.
Eigen::Index commensurate_bins(double period, double bin_width);

}  // namespace tgate

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tgate/decay_model.hpp"
#include "tgate/error.hpp"
#include "tgate/sweep.hpp"

namespace tgate {

/// Confocal scan: per-pixel counts for both MW channels, with and without the
/// gate. Planes are ny x nx (row = y).
struct ScanMap {
  double pitch = 0.4;   // um
  double dwell = 0.01;  // s per pixel
  Eigen::MatrixXd gated_off;
  Eigen::MatrixXd gated_on;
  Eigen::MatrixXd ungated_off;
  Eigen::MatrixXd ungated_on;

  Eigen::Index nx() const { return gated_off.cols(); }
  Eigen::Index ny() const { return gated_off.rows(); }
  void validate() const;
};

enum class MapChannel { gated, ungated };

std::string_view to_string(MapChannel channel);
MapChannel parse_map_channel(std::string_view text);

struct SnrMap {
  Eigen::MatrixXd values;  // upsampled SNR, (ny*factor) x (nx*factor)
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zero_total;  // ny x nx
  int factor = 1;
  std::string method = "catmull-rom";
};

namespace detail {

// Catmull-Rom through v1 at t=0 and v2 at t=1, written in differences so a
// constant input comes back bit-exact.
template <typename Scalar>
Scalar catmull_rom(Scalar v0, Scalar v1, Scalar v2, Scalar v3, Scalar t) {
  const Scalar a = v2 - v0;
  const Scalar b = Scalar(2) * (v0 - v1) + Scalar(3) * (v2 - v1) + (v2 - v3);
  const Scalar c = Scalar(3) * (v1 - v2) + (v3 - v0);
  return v1 + Scalar(0.5) * t * (a + t * (b + t * c));
}

}  // namespace detail

/// Bicubic (Catmull-Rom, edge-clamped) upsampling. Output node (i, j) samples
/// the input at (i/factor, j/factor), so every input node is reproduced.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> bicubic_upsample(
    const Eigen::MatrixBase<Derived>& in, int factor) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(factor >= 1, "interpolation factor must be >= 1");
  require(in.size() > 0, "cannot interpolate an empty map");
  const Eigen::Index rows = in.rows();
  const Eigen::Index cols = in.cols();
  const Eigen::Index f = factor;

  auto clamp = [](Eigen::Index i, Eigen::Index n) { return std::clamp<Eigen::Index>(i, 0, n - 1); };
  auto sample = [&](auto&& at, Eigen::Index n, Eigen::Index out) {
    const Eigen::Index base = out / f;
    const Scalar t = Scalar(out % f) / Scalar(f);
    if (out % f == 0) return at(clamp(base, n));
    return detail::catmull_rom(at(clamp(base - 1, n)), at(clamp(base, n)), at(clamp(base + 1, n)),
                               at(clamp(base + 2, n)), t);
  };

  Matrix horizontal(rows, cols * f);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols * f; ++c)
      horizontal(r, c) = sample([&](Eigen::Index k) { return Scalar(in(r, k)); }, cols, c);

  Matrix out(rows * f, cols * f);
  for (Eigen::Index c = 0; c < cols * f; ++c)
    for (Eigen::Index r = 0; r < rows * f; ++r)
      out(r, c) = sample([&](Eigen::Index k) { return horizontal(k, c); }, rows, r);
  return out;
}

/// Per-pixel (N_off - N_on)/sqrt(N_off + N_on), zero where no counts were
/// recorded, then upsampled by `factor`.
SnrMap snr_map(const ScanMap& scan, MapChannel channel, int factor = 4);

/// Gaussian spot of NV emission: brightness multiplies the model's spin
/// amplitudes at the spot center.
struct Emitter {
  double x = 0.0;  // um
  double y = 0.0;  // um
  double width = 0.3;  // um, Gaussian sigma
  double brightness = 1.0;
};

struct ScanScene {
  Eigen::Index nx = 32;
  Eigen::Index ny = 32;
  double pitch = 0.4;   // um
  double dwell = 0.01;  // s per pixel
  double tau_c = 10.0;  // ns, gate onset for the gated planes
  double mw_duty = 0.5;
  double c_sat = 0.15;
  std::vector<Emitter> emitters;

  void validate() const;
};

/// NV brightness profile sum_k b_k exp(-r_k^2 / 2 w_k^2) at pixel centers.
Eigen::MatrixXd emitter_profile(const ScanScene& scene);

/// Pixels within the half-maximum contour of at least one emitter.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> emitter_mask(const ScanScene& scene);

/// Scan of `scene` where the spin components of `model` are weighted by the
/// emitter profile and the background is uniform. Expected counts, or Poisson
/// draws when a seed is given.
ScanMap synth_scan(const FluorescenceModel& model, const PulseTrain& train, const ScanScene& scene,
                   std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace tgate

#include "tgate/scan_map.hpp"

#include <cmath>
#include <random>

#include "tgate/metrics.hpp"
#include "tgate/random.hpp"

namespace tgate {

void ScanMap::validate() const {
  require(pitch > 0.0 && dwell > 0.0, "scan pitch and dwell must be positive");
  require(gated_off.size() > 0, "scan map is empty");
  for (const auto* plane : {&gated_on, &ungated_off, &ungated_on})
    require(plane->rows() == ny() && plane->cols() == nx(), "scan count planes differ in shape");
  for (const auto* plane : {&gated_off, &gated_on, &ungated_off, &ungated_on})
    require(plane->allFinite() && (plane->array() >= 0.0).all(), "scan counts must be >= 0");
}

std::string_view to_string(MapChannel channel) {
  return channel == MapChannel::gated ? "gated" : "ungated";
}

MapChannel parse_map_channel(std::string_view text) {
  if (text == "gated") return MapChannel::gated;
  if (text == "ungated") return MapChannel::ungated;
  throw ValidationError("unknown map channel '" + std::string(text) + "'");
}

SnrMap snr_map(const ScanMap& scan, MapChannel channel, int factor) {
  scan.validate();
  const auto& off = channel == MapChannel::gated ? scan.gated_off : scan.ungated_off;
  const auto& on = channel == MapChannel::gated ? scan.gated_on : scan.ungated_on;
  Eigen::MatrixXd pixel(scan.ny(), scan.nx());
  SnrMap map;
  map.zero_total.resize(scan.ny(), scan.nx());
  for (Eigen::Index c = 0; c < scan.nx(); ++c) {
    for (Eigen::Index r = 0; r < scan.ny(); ++r) {
      const bool empty = off(r, c) + on(r, c) == 0.0;
      map.zero_total(r, c) = empty;
      pixel(r, c) = empty ? 0.0 : snr({off(r, c), on(r, c)});
    }
  }
  map.factor = factor;
  map.values = bicubic_upsample(pixel, factor);
  return map;
}

void ScanScene::validate() const {
  require(nx > 0 && ny > 0, "scan must have at least one pixel");
  require(pitch > 0.0 && dwell > 0.0, "scan pitch and dwell must be positive");
  require(tau_c >= 0.0, "gate onset must be >= 0");
  require(mw_duty > 0.0 && mw_duty < 1.0, "mw_duty must lie in (0, 1)");
  require(c_sat >= 0.0 && c_sat <= 1.0, "c_sat must lie in [0, 1]");
  for (const auto& e : emitters)
    require(e.width > 0.0 && e.brightness >= 0.0, "emitter width must be > 0, brightness >= 0");
}

namespace {

double spot(const Emitter& e, double x, double y) {
  const double r2 = (x - e.x) * (x - e.x) + (y - e.y) * (y - e.y);
  return std::exp(-r2 / (2.0 * e.width * e.width));
}

}  // namespace

Eigen::MatrixXd emitter_profile(const ScanScene& scene) {
  scene.validate();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(scene.ny, scene.nx);
  for (Eigen::Index c = 0; c < scene.nx; ++c)
    for (Eigen::Index r = 0; r < scene.ny; ++r)
      for (const auto& e : scene.emitters)
        p(r, c) += e.brightness * spot(e, static_cast<double>(c) * scene.pitch,
                                       static_cast<double>(r) * scene.pitch);
  return p;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> emitter_mask(const ScanScene& scene) {
  scene.validate();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(scene.ny, scene.nx, false);
  for (Eigen::Index c = 0; c < scene.nx; ++c)
    for (Eigen::Index r = 0; r < scene.ny; ++r)
      for (const auto& e : scene.emitters)
        if (spot(e, static_cast<double>(c) * scene.pitch, static_cast<double>(r) * scene.pitch) >= 0.5)
          mask(r, c) = true;
  return mask;
}

ScanMap synth_scan(const FluorescenceModel& model, const PulseTrain& train, const ScanScene& scene,
                   std::optional<std::uint64_t> seed) {
  model.validate();
  const Eigen::MatrixXd profile = emitter_profile(scene);

  // Counts are affine in the NV weight: split the unit-brightness rates into
  // the NV part and the uniform background once, then combine per pixel.
  struct Split {
    CountPair nv;
    CountPair bg;
  };
  auto split = [&](double tau_c) {
    const GatedCounts r0 = steady_rate(model, Spin::ms0, tau_c, train);
    const GatedCounts r1 = steady_rate(model, SpinState::mixed(scene.c_sat), tau_c, train);
    const double t0 = scene.dwell * (1.0 - scene.mw_duty);
    const double t1 = scene.dwell * scene.mw_duty;
    return Split{{r0.signal * t0, r1.signal * t1},
                 {(r0.background + r0.dark) * t0, (r1.background + r1.dark) * t1}};
  };
  const Split gated = split(scene.tau_c);
  const Split ungated = split(0.0);
  const CountPair nv_gated = gated.nv, bg_gated = gated.bg;
  const CountPair nv_ungated = ungated.nv, bg_ungated = ungated.bg;

  ScanMap scan;
  scan.pitch = scene.pitch;
  scan.dwell = scene.dwell;
  scan.gated_off = (profile.array() * nv_gated.n0 + bg_gated.n0).matrix();
  scan.gated_on = (profile.array() * nv_gated.n1 + bg_gated.n1).matrix();
  scan.ungated_off = (profile.array() * nv_ungated.n0 + bg_ungated.n0).matrix();
  scan.ungated_on = (profile.array() * nv_ungated.n1 + bg_ungated.n1).matrix();

  if (seed) {
    // The gated counts are a subset of the ungated ones: draw the gated part
    // and the complementary part independently and add.
    Engine rng = make_engine(*seed);
    auto draw = [&](double mean) {
      if (mean <= 0.0) return 0.0;
      std::poisson_distribution<std::int64_t> d(mean);
      return static_cast<double>(d(rng));
    };
    for (Eigen::Index c = 0; c < scan.nx(); ++c) {
      for (Eigen::Index r = 0; r < scan.ny(); ++r) {
        const double off_in = draw(scan.gated_off(r, c));
        const double off_out = draw(std::max(0.0, scan.ungated_off(r, c) - scan.gated_off(r, c)));
        const double on_in = draw(scan.gated_on(r, c));
        const double on_out = draw(std::max(0.0, scan.ungated_on(r, c) - scan.gated_on(r, c)));
        scan.gated_off(r, c) = off_in;
        scan.gated_on(r, c) = on_in;
        scan.ungated_off(r, c) = off_in + off_out;
        scan.ungated_on(r, c) = on_in + on_out;
      }
    }
  }
  scan.validate();
  return scan;
}

}  // namespace tgate

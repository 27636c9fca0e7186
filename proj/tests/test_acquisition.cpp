#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "tgate/acquisition.hpp"
#include "tgate/random.hpp"

namespace tgate {
namespace {

FluorescenceModel bulk_model() {
  FluorescenceModel m;
  m.spin0 = {{0.02, 12.0, "nv0"}};
  m.spin1 = {{0.02, 8.0, "nv1"}};
  m.background = {{0.05, 1.7, "siv"}};
  return m;
}

// Pearson chi-square of observed counts against expectations, bins merged
// left to right until each expects at least 20 counts.
double chi_square_p_value(const Eigen::VectorXd& observed, const Eigen::VectorXd& expected) {
  double stat = 0.0;
  int dof = -1;
  double o = 0.0, e = 0.0;
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += expected[i];
    if (e >= 20.0 || i + 1 == observed.size()) {
      stat += (o - e) * (o - e) / e;
      ++dof;
      o = e = 0.0;
    }
  }
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TEST(SampleHistogram, DeterministicPerSeed) {
  const auto exp = histogram_expectation(bulk_model(), Spin::ms0, PulseTrain(20e6), 0.5, 1e-3);
  const auto a = sample_histogram(exp, 3);
  const auto b = sample_histogram(exp, 3);
  const auto c = sample_histogram(exp, 4);
  EXPECT_TRUE((a.counts.array() == b.counts.array()).all());
  EXPECT_FALSE((a.counts.array() == c.counts.array()).all());
  EXPECT_NO_THROW(a.validate());
}

TEST(SampleHistogram, PoissonMeanAndVariance) {
  ExpectedHistogram h;
  h.rep_rate = 1e9 / 100.0;
  h.bin_width = 1.0;
  h.counts = Eigen::VectorXd::Constant(100, 50.0);
  const auto s = sample_histogram(h, 17);
  const Eigen::VectorXd v = s.counts.cast<double>();
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / 99.0;
  EXPECT_NEAR(mean, 50.0, 4.0 * std::sqrt(50.0 / 100.0));
  EXPECT_NEAR(var / 50.0, 1.0, 0.45);
}

TEST(SampleHistogram, ZeroExpectationGivesZero) {
  ExpectedHistogram h;
  h.rep_rate = 1e8;
  h.bin_width = 1.0;
  h.counts = Eigen::VectorXd::Zero(10);
  EXPECT_EQ(sample_histogram(h, 1).total(), 0);
}

TEST(MwState, SquareWaveStartsOff) {
  EXPECT_EQ(mw_state(0.0, 50.0), Channel::mw_off);
  EXPECT_EQ(mw_state(9.99e6, 50.0), Channel::mw_off);
  EXPECT_EQ(mw_state(10.0e6, 50.0), Channel::mw_on);
  EXPECT_EQ(mw_state(20.0e6, 50.0), Channel::mw_off);
}

TEST(SimulateEvents, SortedAndDeterministic) {
  EventSimConfig cfg;
  cfg.integration_time = 0.02;
  const auto a = simulate_events(bulk_model(), PulseTrain(20e6), cfg, 9);
  const auto b = simulate_events(bulk_model(), PulseTrain(20e6), cfg, 9);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(),
                             [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; }));
  for (const auto& e : a) EXPECT_EQ(e.channel, mw_state(std::floor(e.timestamp / 50.0) * 50.0, 50.0));
}

TEST(SimulateEvents, ArrivalHistogramFollowsTheModel) {
  EventSimConfig cfg;
  cfg.integration_time = 0.02;  // one MW-off half cycle of the 50 Hz toggle
  const PulseTrain t(20e6);
  auto m = bulk_model();
  m.dark_rate = 2e-4;
  const auto events = simulate_events(m, t, cfg, 21);
  const auto hist = bin_events(events, t, 0.5, Channel::mw_off, 0.01);
  const auto want = histogram_expectation(m, Spin::ms0, t, 0.5, 0.01);
  EXPECT_NEAR(static_cast<double>(hist.total()), want.total(), 5.0 * std::sqrt(want.total()));
  EXPECT_GT(chi_square_p_value(hist.counts.cast<double>(), want.counts), 1e-4);
}

TEST(SimulateEvents, IrfTableSamplingFollowsTheModel) {
  EventSimConfig cfg;
  cfg.integration_time = 0.02;
  const PulseTrain t(20e6);
  auto m = bulk_model();
  m.irf_sigma = 0.3;
  m.pulse_time = 2.0;
  const auto events = simulate_events(m, t, cfg, 22);
  const auto hist = bin_events(events, t, 0.5, Channel::mw_on, 0.01);
  const auto want = histogram_expectation(m, SpinState::mixed(cfg.c_sat), t, 0.5, 0.01);
  EXPECT_GT(chi_square_p_value(hist.counts.cast<double>(), want.counts), 1e-4);
}

TEST(SimulateEvents, RejectsFastToggle) {
  EventSimConfig cfg;
  cfg.mw_toggle_rate = 5e6;
  EXPECT_THROW(simulate_events(bulk_model(), PulseTrain(20e6), cfg, 1), ValidationError);
}

TEST(HwGate, JitterFreeEqualsOfflineGate) {
  EventSimConfig cfg;
  cfg.integration_time = 0.01;
  const PulseTrain t(20e6);
  const auto events = simulate_events(bulk_model(), t, cfg, 5);
  HwGateConfig hw{6.0, 30.0, 0.0};
  EXPECT_EQ(hw_gate(events, t, hw, 1), offline_gate(events, t, GateWindow(6.0, 36.0)));
}

TEST(HwGate, JitterMovesTheEdges) {
  EventSimConfig cfg;
  cfg.integration_time = 0.01;
  const PulseTrain t(20e6);
  const auto events = simulate_events(bulk_model(), t, cfg, 5);
  HwGateConfig hw{6.0, 30.0, 0.5};
  const auto jittered = hw_gate(events, t, hw, 1);
  const auto clean = offline_gate(events, t, GateWindow(6.0, 36.0));
  EXPECT_NE(jittered, clean);
  EXPECT_NEAR(static_cast<double>(jittered.size()), static_cast<double>(clean.size()),
              0.05 * static_cast<double>(clean.size()));
}

TEST(HwGate, ConfigValidation) {
  const PulseTrain t(20e6);
  EXPECT_THROW((HwGateConfig{40.0, 20.0, 0.0}.validate(t)), ValidationError);
  EXPECT_THROW((HwGateConfig{0.0, 0.0, 0.0}.validate(t)), ValidationError);
  EXPECT_NO_THROW((HwGateConfig{10.0, 40.0, 0.0}.validate(t)));
}

TEST(GatedSum, AlignedGateSumsBins) {
  CountHistogram h;
  h.rep_rate = 1e8;  // 10 ns
  h.bin_width = 1.0;
  h.counts = CountHistogram::Vector::LinSpaced(10, 0, 9);
  EXPECT_EQ(gated_sum(h, GateWindow(2.0, 5.0)), 2 + 3 + 4);
  EXPECT_EQ(gated_sum(h, GateWindow(0.0, 10.0)), 45);
  EXPECT_EQ(gated_sum(h, GateWindow(7.0)), 7 + 8 + 9);
  EXPECT_THROW(gated_sum(h, GateWindow(2.5, 5.0)), ValidationError);
}

TEST(GatedSum, ExpectedHistogramFullGateIsTotal) {
  const auto exp = histogram_expectation(bulk_model(), Spin::ms0, PulseTrain(20e6), 0.1, 1.0);
  EXPECT_NEAR(gated_sum(exp, GateWindow(0.0, 50.0)), exp.total(), 1e-9 * exp.total());
}

TEST(McSnr, DeterministicAndThreadInvariant) {
  McConfig cfg;
  cfg.trials = 40;
  cfg.integration_time = 0.01;
  cfg.threads = 1;
  const PulseTrain t(20e6);
  const auto a = mc_snr_distribution(bulk_model(), GateWindow(6.0, 50.0), t, cfg, 7);
  cfg.threads = 6;
  const auto b = mc_snr_distribution(bulk_model(), GateWindow(6.0, 50.0), t, cfg, 7);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  EXPECT_EQ(a.analytic, b.analytic);
}

TEST(McSnr, StddevNearUnityForShotNoise) {
  // The SNR estimator has unit standard deviation in the shot-noise limit.
  McConfig cfg;
  cfg.trials = 300;
  cfg.integration_time = 0.01;
  const auto d = mc_snr_distribution(bulk_model(), GateWindow(6.0, 50.0), PulseTrain(20e6), cfg, 3);
  EXPECT_NEAR(d.stddev, 1.0, 0.15);
  EXPECT_NEAR(d.mean, d.analytic, 4.0 * d.stddev / std::sqrt(300.0));
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, {0, 0}), derive_seed(1, {0, 1}));
  EXPECT_NE(derive_seed(1, {0, 1}), derive_seed(1, {1, 0}));
  EXPECT_EQ(derive_seed(7, {3}), derive_seed(7, {3}));
}

}  // namespace
}  // namespace tgate

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "reference_values.hpp"
#include "tgate/decay_model.hpp"
#include "tgate/quadrature.hpp"
#include "tgate/special.hpp"

namespace tgate {
namespace {

FluorescenceModel bulk_model() {
  FluorescenceModel m;
  m.spin0 = {{1.0, 12.0, "nv0"}};
  m.spin1 = {{1.0, 8.0, "nv1"}};
  m.background = {{1.0, 1.7, "siv"}};
  return m;
}

TEST(DecayComponent, RejectsNonPositiveLifetime) {
  EXPECT_THROW((DecayComponent{1.0, 0.0, ""}.validate()), ValidationError);
  EXPECT_THROW((DecayComponent{-1.0, 1.0, ""}.validate()), ValidationError);
  EXPECT_NO_THROW((DecayComponent{0.0, 1.0, ""}.validate()));
}

TEST(FluorescenceModel, NeedsBothSpinStates) {
  FluorescenceModel m = bulk_model();
  m.spin1.clear();
  EXPECT_THROW(m.validate(), ValidationError);
  m = bulk_model();
  m.irf_sigma = -0.1;
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(GateWindow, RequiresOrderedEdges) {
  EXPECT_THROW(GateWindow(5.0, 5.0), ValidationError);
  EXPECT_THROW(GateWindow(-1.0, 5.0), ValidationError);
  EXPECT_FALSE(GateWindow(2.0).bounded());
  EXPECT_DOUBLE_EQ(GateWindow(2.0, 7.5).length(), 5.5);
}

TEST(SpinState, MixedFractions) {
  const auto s = SpinState::mixed(0.25);
  EXPECT_DOUBLE_EQ(s.ms1_fraction(), 0.25);
  EXPECT_DOUBLE_EQ(s.ms0_fraction(), 0.75);
  EXPECT_THROW(SpinState::mixed(1.5), ValidationError);
}

TEST(PulseTrain, PeriodInNanoseconds) {
  EXPECT_DOUBLE_EQ(PulseTrain(20e6).period(), 50.0);
  EXPECT_THROW(PulseTrain(0.0), ValidationError);
}

TEST(GatedCounts, ClosedFormPerComponent) {
  const auto m = bulk_model();
  const GateWindow g(6.0, 50.0);
  const auto c = gated_counts(m, Spin::ms0, g);
  EXPECT_NEAR(c.signal, exponential_integral(1.0, 12.0, 6.0, 50.0), 1e-15);
  EXPECT_NEAR(c.background, exponential_integral(1.0, 1.7, 6.0, 50.0), 1e-15);
  EXPECT_EQ(c.dark, 0.0);
}

TEST(GatedCounts, MixtureIsLinearInFraction) {
  const auto m = bulk_model();
  const GateWindow g(3.0, 50.0);
  const double n0 = gated_counts(m, Spin::ms0, g).signal;
  const double n1 = gated_counts(m, Spin::ms1, g).signal;
  const double mix = gated_counts(m, SpinState::mixed(0.3), g).signal;
  EXPECT_NEAR(mix, 0.7 * n0 + 0.3 * n1, 1e-14 * n0);
}

TEST(GatedCounts, PulseTimeShiftsTheDecay) {
  FluorescenceModel m = bulk_model();
  m.pulse_time = 2.0;
  const auto shifted = gated_counts(m, Spin::ms0, GateWindow(5.0, 40.0));
  m.pulse_time = 0.0;
  const auto ref = gated_counts(m, Spin::ms0, GateWindow(3.0, 38.0));
  EXPECT_NEAR(shifted.signal, ref.signal, 1e-14);
}

TEST(GatedCounts, DarkCountsScaleWithGateLength) {
  FluorescenceModel m = bulk_model();
  m.dark_rate = 1e-3;
  EXPECT_DOUBLE_EQ(gated_counts(m, Spin::ms0, GateWindow(10.0, 30.0)).dark, 0.02);
  EXPECT_THROW(gated_counts(m, Spin::ms0, GateWindow(10.0)), ValidationError);
}

TEST(GatedCounts, IrfConvolvedMatchesReference) {
  for (const auto& c : reference::kIrfGate) {
    FluorescenceModel m;
    m.spin0 = {{c.a, c.tau, ""}};
    m.spin1 = {{c.a, c.tau, ""}};
    m.irf_sigma = c.sigma;
    m.pulse_time = c.pulse_time;
    const double got = gated_counts(m, Spin::ms0, GateWindow(c.t0, c.t1)).signal;
    EXPECT_LT(std::abs(got - c.value) / c.value, 1e-9) << c.tau << " " << c.t0 << " " << c.t1;
  }
}

TEST(GatedCounts, IrfNeedsFiniteGate) {
  FluorescenceModel m = bulk_model();
  m.irf_sigma = 0.2;
  EXPECT_THROW(gated_counts(m, Spin::ms0, GateWindow(1.0)), ValidationError);
}

TEST(GatedCounts, MonotoneInGateOnset) {
  const auto m = bulk_model();
  double prev = INFINITY;
  for (double t = 0.0; t < 50.0; t += 0.5) {
    const double v = gated_counts(m, Spin::ms0, GateWindow(t, 50.0)).total();
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(PulseTrainCounts, GateMustFitThePeriod) {
  EXPECT_THROW(gated_counts(bulk_model(), Spin::ms0, GateWindow(0.0, 60.0), PulseTrain(20e6)),
               ValidationError);
  EXPECT_THROW(steady_rate(bulk_model(), Spin::ms0, 50.0, PulseTrain(20e6)), ValidationError);
}

TEST(PulseTrainCounts, RateIsCountsTimesRepetitionRate) {
  const PulseTrain t(20e6);
  const GateWindow g(4.0, 50.0);
  const auto per_pulse = gated_counts(bulk_model(), Spin::ms0, g, t);
  const auto rate = gated_rate(bulk_model(), Spin::ms0, g, t);
  EXPECT_DOUBLE_EQ(rate.signal, per_pulse.signal * 20e6);
}

TEST(PulseTrainCounts, FoldedTailsRecoverTheFullYield) {
  // With folding, one period collects every photon of one pulse: a*tau.
  const PulseTrain t(40e6, TailMode::folded);
  const auto c = gated_counts(bulk_model(), Spin::ms0, GateWindow(0.0, t.period()), t);
  EXPECT_NEAR(c.signal, 12.0, 1e-12);
  EXPECT_NEAR(c.background, 1.7, 1e-12);
}

TEST(HistogramExpectation, SumsToTheGatedTotal) {
  FluorescenceModel m = bulk_model();
  m.dark_rate = 2e-4;
  const PulseTrain t(20e6);
  const auto h = histogram_expectation(m, Spin::ms1, t, 0.1, 0.5, Channel::mw_on);
  EXPECT_EQ(h.size(), 500);
  EXPECT_NO_THROW(h.validate());
  const double want = gated_rate(m, Spin::ms1, GateWindow(0.0, 50.0), t).total() * 0.5;
  EXPECT_NEAR(h.total(), want, 1e-10 * want);
  EXPECT_EQ(h.channel, Channel::mw_on);
}

TEST(HistogramExpectation, IrfBinsIntegrateTheIntensity) {
  FluorescenceModel m = bulk_model();
  m.irf_sigma = 0.25;
  m.pulse_time = 1.0;
  const PulseTrain t(20e6);
  const auto h = histogram_expectation(m, Spin::ms0, t, 0.5, 1.0);
  const double pulses = 20e6;
  for (Eigen::Index b : {0, 2, 3, 10, 60}) {
    const double lo = h.bin_start(b);
    const double want =
        pulses * integrate([&](double x) { return expected_intensity(m, Spin::ms0, x); }, lo, lo + 0.5);
    EXPECT_NEAR(h.counts[b], want, 1e-8 * want) << b;
  }
}

TEST(HistogramExpectation, RejectsIncommensurateBins) {
  EXPECT_THROW(histogram_expectation(bulk_model(), Spin::ms0, PulseTrain(20e6), 0.3, 1.0),
               ValidationError);
}

TEST(BackgroundRatio, IntegratedAndAmplitudeKinds) {
  const PulseTrain t(20e6);
  const auto integ = with_background_ratio(bulk_model(), 3.0, RatioKind::integrated, t);
  const auto c = gated_counts(integ, Spin::ms0, GateWindow(0.0, 50.0), t);
  EXPECT_NEAR(c.background / c.signal, 3.0, 1e-13);
  const auto amp = with_background_ratio(bulk_model(), 3.0, RatioKind::amplitude, t);
  EXPECT_DOUBLE_EQ(amp.background[0].amplitude, 3.0);
}

TEST(ScaleAmplitudes, LeavesDarkRateAlone) {
  FluorescenceModel m = bulk_model();
  m.dark_rate = 1e-4;
  const auto s = scale_amplitudes(m, 2.0);
  EXPECT_DOUBLE_EQ(s.spin0[0].amplitude, 2.0);
  EXPECT_DOUBLE_EQ(s.background[0].amplitude, 2.0);
  EXPECT_DOUBLE_EQ(s.dark_rate, 1e-4);
}

TEST(Channel, TextRoundTrip) {
  EXPECT_EQ(parse_channel(to_string(Channel::mw_on)), Channel::mw_on);
  EXPECT_EQ(parse_channel(to_string(Channel::mw_off)), Channel::mw_off);
  EXPECT_THROW(parse_channel("both"), ValidationError);
}

}  // namespace
}  // namespace tgate

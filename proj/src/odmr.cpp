#include "tgate/odmr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tgate/acquisition.hpp"
#include "tgate/levenberg_marquardt.hpp"
#include "tgate/random.hpp"

namespace tgate {

void OdmrSpectrum::validate() const {
  require(freqs.size() == counts.size(), "spectrum frequency and count lengths differ");
  require(freqs.size() > 0, "spectrum is empty");
  for (Eigen::Index i = 1; i < freqs.size(); ++i)
    require(freqs[i] > freqs[i - 1], "spectrum frequencies must be strictly increasing");
  require(counts.allFinite() && (counts.array() >= 0.0).all(), "spectrum counts must be >= 0");
  require(integration_per_point >= 0.0, "integration per point must be >= 0");
}

double LorentzianDoublet::dip_fraction(double f) const {
  double p = 0.0;
  for (const auto& d : dips) {
    const double h = 0.5 * d.fwhm;
    const double x = f - d.center;
    p += d.depth * h * h / (x * x + h * h);
  }
  return p;
}

Eigen::VectorXd LorentzianDoublet::evaluate(const Eigen::Ref<const Eigen::VectorXd>& freqs) const {
  return freqs.unaryExpr([this](double f) { return (*this)(f); });
}

const LorentzianDip& LorentzianDoublet::deeper() const {
  const auto& a = dips[0];
  const auto& b = dips[1];
  if (a.depth != b.depth) return a.depth > b.depth ? a : b;
  return a.center <= b.center ? a : b;
}

OdmrSpectrum synth_odmr(const FluorescenceModel& model, const PulseTrain& train,
                        const GateWindow& gate, const Eigen::Ref<const Eigen::VectorXd>& freqs,
                        const DoubletTruth& truth, double integration_per_point,
                        std::optional<std::uint64_t> seed) {
  require(integration_per_point > 0.0, "integration per point must be > 0");
  for (const auto& d : truth)
    require(d.fwhm > 0.0 && d.depth >= 0.0 && d.depth < 1.0, "invalid doublet truth");
  const GatedCounts off = gated_rate(model, Spin::ms0, gate, train);
  const GatedCounts on = gated_rate(model, Spin::ms1, gate, train);
  const double n0 = off.total() * integration_per_point;
  const double n1 = on.total() * integration_per_point;
  const LorentzianDoublet shape{1.0, truth};

  OdmrSpectrum s;
  s.freqs = freqs;
  s.counts.resize(freqs.size());
  s.integration_per_point = integration_per_point;
  s.gate = gate;
  for (Eigen::Index i = 0; i < freqs.size(); ++i) {
    const double p = std::min(shape.dip_fraction(freqs[i]), 1.0);
    s.counts[i] = (1.0 - p) * n0 + p * n1;
  }
  if (seed) {
    Engine rng = make_engine(*seed);
    for (Eigen::Index i = 0; i < s.counts.size(); ++i) {
      if (s.counts[i] <= 0.0) continue;
      std::poisson_distribution<std::int64_t> draw(s.counts[i]);
      s.counts[i] = static_cast<double>(draw(rng));
    }
  }
  s.validate();
  return s;
}

namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

constexpr double kInitialFwhm = 10e6;  // Hz

/// Fit in normalized coordinates x = (f - mid)/half_span, y/y_scale, so the
/// normal equations stay well conditioned for GHz-scale frequencies.
class DoubletProblem {
 public:
  DoubletProblem(const OdmrSpectrum& s, double mid, double half_span, double y_scale)
      : x_((s.freqs.array() - mid) / half_span), y_(s.counts / y_scale) {}

  Eigen::Index residual_count() const { return x_.size(); }

  // p = [baseline, c1, w1, d1, c2, w2, d2]
  void residuals(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
      double dip = 0.0;
      for (int k = 0; k < 2; ++k) {
        const double h = 0.5 * p[1 + 3 * k + 1];
        const double dx = x_[i] - p[1 + 3 * k];
        dip += p[1 + 3 * k + 2] * h * h / (dx * dx + h * h);
      }
      r[i] = p[0] * (1.0 - dip) - y_[i];
    }
  }

  void jacobian(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
      double dip = 0.0;
      for (int k = 0; k < 2; ++k) {
        const Eigen::Index o = 1 + 3 * k;
        const double h = 0.5 * p[o + 1];
        const double depth = p[o + 2];
        const double dx = x_[i] - p[o];
        const double D = dx * dx + h * h;
        const double L = h * h / D;
        dip += depth * L;
        J(i, o) = -p[0] * depth * 2.0 * h * h * dx / (D * D);
        J(i, o + 1) = -p[0] * depth * h * dx * dx / (D * D);
        J(i, o + 2) = -p[0] * L;
      }
      J(i, 0) = 1.0 - dip;
    }
  }

 private:
  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
};

}  // namespace

LorentzianDoublet initial_guess(const OdmrSpectrum& s) {
  const Eigen::Index n = s.freqs.size();
  const Eigen::Index edge = std::max<Eigen::Index>(1, (n + 19) / 20);  // 5% per side
  std::vector<double> outer;
  for (Eigen::Index i = 0; i < edge; ++i) {
    outer.push_back(s.counts[i]);
    outer.push_back(s.counts[n - 1 - i]);
  }
  const double baseline = median(outer);

  // Light smoothing so shot noise does not create spurious minima.
  Eigen::VectorXd smooth(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - 2);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + 2);
    smooth[i] = s.counts.segment(lo, hi - lo + 1).mean();
  }
  std::vector<Eigen::Index> minima;
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    if (smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1]) minima.push_back(i);
  if (minima.empty()) {
    Eigen::Index i = 0;
    smooth.minCoeff(&i);
    minima.push_back(i);
  }
  std::sort(minima.begin(), minima.end(),
            [&](Eigen::Index a, Eigen::Index b) { return smooth[a] < smooth[b]; });

  auto depth_at = [&](Eigen::Index i) {
    return baseline > 0.0 ? std::clamp(1.0 - smooth[i] / baseline, 0.0, 0.99) : 0.0;
  };

  LorentzianDoublet g;
  g.baseline = baseline;
  const Eigen::Index first = minima.front();
  std::optional<Eigen::Index> second;
  for (std::size_t j = 1; j < minima.size(); ++j) {
    if (std::abs(s.freqs[minima[j]] - s.freqs[first]) >= kInitialFwhm) {
      second = minima[j];
      break;
    }
  }
  if (second) {
    g.dips[0] = {s.freqs[first], kInitialFwhm, depth_at(first)};
    g.dips[1] = {s.freqs[*second], kInitialFwhm, depth_at(*second)};
  } else {
    const double d = 0.5 * depth_at(first);
    g.dips[0] = {s.freqs[first] - 0.5 * kInitialFwhm, kInitialFwhm, d};
    g.dips[1] = {s.freqs[first] + 0.5 * kInitialFwhm, kInitialFwhm, d};
  }
  if (g.dips[0].center > g.dips[1].center) std::swap(g.dips[0], g.dips[1]);
  return g;
}

DoubletFit fit_double_lorentzian(const OdmrSpectrum& spectrum, const FitOptions& opt) {
  spectrum.validate();
  require(spectrum.freqs.size() >= 7, "double-Lorentzian fit needs at least 7 points");

  const double lo = spectrum.freqs[0];
  const double hi = spectrum.freqs[spectrum.freqs.size() - 1];
  const double mid = 0.5 * (lo + hi);
  const double half_span = 0.5 * (hi - lo);
  const double y_scale = spectrum.counts.cwiseAbs().maxCoeff();
  const double mean = spectrum.counts.mean();
  const double variance = (spectrum.counts.array() - mean).square().mean();
  const LorentzianDoublet guess = initial_guess(spectrum);
  if (!(y_scale > 0.0) || variance <= 1e-24 * mean * mean)
    throw FitError("degenerate spectrum: counts have zero variance", guess);

  auto pack = [&](const LorentzianDoublet& d) {
    Eigen::VectorXd p(7);
    p[0] = d.baseline / y_scale;
    for (int k = 0; k < 2; ++k) {
      p[1 + 3 * k] = (d.dips[k].center - mid) / half_span;
      p[2 + 3 * k] = d.dips[k].fwhm / half_span;
      p[3 + 3 * k] = d.dips[k].depth;
    }
    return p;
  };
  auto unpack = [&](const Eigen::VectorXd& p) {
    LorentzianDoublet d;
    d.baseline = p[0] * y_scale;
    for (int k = 0; k < 2; ++k) {
      d.dips[k].center = mid + p[1 + 3 * k] * half_span;
      d.dips[k].fwhm = std::abs(p[2 + 3 * k]) * half_span;
      d.dips[k].depth = p[3 + 3 * k];
    }
    if (d.dips[0].center > d.dips[1].center) std::swap(d.dips[0], d.dips[1]);
    return d;
  };

  const DoubletProblem problem(spectrum, mid, half_span, y_scale);
  Eigen::VectorXd p = pack(guess);
  LmOptions lm;
  lm.max_iterations = opt.max_iterations;
  lm.relative_tolerance = opt.relative_tolerance;
  const LmResult result = levenberg_marquardt(problem, p, lm);

  const LorentzianDoublet fitted = unpack(p);
  if (result.status != LmStatus::converged || !p.allFinite())
    throw FitError("double-Lorentzian fit did not converge in " +
                       std::to_string(result.iterations) + " iterations",
                   fitted);
  return {fitted, std::sqrt(2.0 * result.cost) * y_scale, result.iterations};
}

OdmrSpectrum gate_measured_odmr(std::span<const CountHistogram> histograms,
                                std::span<const double> freqs, const GateWindow& gate) {
  require(!histograms.empty(), "no histograms given");
  require(histograms.size() == freqs.size(), "one frequency per histogram is required");
  const auto& ref = histograms.front();
  for (const auto& h : histograms) {
    h.validate();
    require(h.bin_width == ref.bin_width && h.size() == ref.size() && h.rep_rate == ref.rep_rate,
            "histograms must share bin width and period");
  }
  OdmrSpectrum s;
  const auto n = static_cast<Eigen::Index>(freqs.size());
  s.freqs = Eigen::Map<const Eigen::VectorXd>(freqs.data(), n);
  s.counts.resize(n);
  s.integration_per_point = ref.integration_time;
  s.gate = gate;
  for (Eigen::Index i = 0; i < n; ++i)
    s.counts[i] = static_cast<double>(gated_sum(histograms[static_cast<std::size_t>(i)], gate));
  s.validate();
  return s;
}

double sensitivity_from_fit(const LorentzianDoublet& doublet, const RatePair& rates,
                            const PhysicalConstants& constants) {
  return sensitivity_cw(doublet.deeper().fwhm, rates, constants);
}

}  // namespace tgate

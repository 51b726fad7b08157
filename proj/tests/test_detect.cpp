#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "hosdetect/detect.hpp"
#include "hosdetect/numeric.hpp"
#include "hosdetect/synth.hpp"

using namespace hosdetect;
using namespace hosdetect::detect;
using hardlimit::HardLimitSpec;
using hardlimit::LimitKind;
using hardlimit::SineInput;
using numeric::GaussianRng;

namespace {

constexpr double kPi = std::numbers::pi;

hos::CoherenceMap bi_map(std::size_t half, double df = 1.0) {
  hos::CoherenceMap m;
  m.order = hos::CoherenceOrder::Bi;
  m.df = df;
  m.bi.half = half;
  m.raw.assign(m.bi.size(), 0.0);
  return m;
}

hos::CoherenceMap tri_map(std::size_t half, std::size_t cap, double df = 1.0) {
  hos::CoherenceMap m;
  m.order = hos::CoherenceOrder::Tri;
  m.df = df;
  m.tri = hos::TriDomain::make(half, cap);
  m.raw.assign(m.tri.size(), 0.0);
  return m;
}

PeakList peaks_at(hos::CoherenceOrder order, std::vector<std::vector<std::size_t>> coords,
                  double df = 1.0) {
  PeakList list;
  list.order = order;
  list.df = df;
  for (auto& c : coords) {
    Peak p;
    p.coords = std::move(c);
    for (std::size_t b : p.coords) p.freqs_hz.push_back(static_cast<double>(b) * df);
    p.value = 0.9;
    list.entries.push_back(std::move(p));
  }
  return list;
}

// Noise at -25 dB sits above the spectral floor, so off-harmonic cells carry
// segment-to-segment randomness instead of frozen leakage phases.
std::vector<double> clipped_channel(double eta, LimitKind kind, double f, double fs,
                                    std::size_t len, double dc, std::uint64_t seed) {
  const double a = 40.0;
  const SineInput input{eta * a, f, 0.0};
  const HardLimitSpec lim{kind, a, 0.0};
  auto y = synth::gen_clipped_sine(input, lim, fs, len, seed, -25.0);
  for (auto& v : y) v += dc;
  return y;
}

const Peak* peak_at(const PeakList& list, std::vector<std::size_t> coords) {
  for (const auto& p : list.entries)
    if (p.coords == coords) return &p;
  return nullptr;
}

std::vector<double> noise_channel(std::size_t len, std::uint64_t seed, double sigma = 1.0) {
  GaussianRng rng(seed);
  std::vector<double> x(len);
  for (auto& v : x) v = sigma * rng.next();
  return x;
}

hos::SegmentConfig seg_cfg(std::size_t m, std::size_t n) {
  hos::SegmentConfig cfg;
  cfg.segments = m;
  cfg.segment_len = n;
  return cfg;
}

}  // namespace

TEST_CASE("fundamental picks the strongest bin with parabolic refinement") {
  hos::PowerSpectrum p;
  p.df = 2.0;
  p.values.assign(32, 1e-6);
  p.values[7] = 1.0;  // bin 8
  CHECK(fundamental_frequency(p) == doctest::Approx(16.0).epsilon(1e-12));

  p.values[6] = 0.2;
  p.values[8] = 0.6;
  const double delta = 0.5 * (0.2 - 0.6) / (0.2 - 2.0 + 0.6);
  CHECK(fundamental_frequency(p) == doctest::Approx((8.0 + delta) * 2.0).epsilon(1e-12));
}

TEST_CASE("broadband and silent spectra have no fundamental") {
  const auto x = noise_channel(16 * 128, 321);
  const auto s = hos::segment_window_fft(x, seg_cfg(16, 128), 128.0);
  CHECK_THROWS_AS(fundamental_frequency(hos::power_spectrum(s)), Error);

  hos::PowerSpectrum zero;
  zero.df = 1.0;
  zero.values.assign(16, 0.0);
  CHECK_THROWS_AS(fundamental_frequency(zero), Error);

  try {
    fundamental_frequency(zero);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoDominantTone);
  }
}

TEST_CASE("find_peaks reports isolated maxima only") {
  DetectionConfig det;
  auto m = bi_map(16);
  CHECK(find_peaks(m, det).entries.empty());

  m.raw[m.bi.index(3, 5)] = 0.8;
  auto peaks = find_peaks(m, det);
  REQUIRE(peaks.entries.size() == 1);
  CHECK(peaks.entries[0].coords == std::vector<std::size_t>{3, 5});
  CHECK(peaks.entries[0].freqs_hz == std::vector<double>{3.0, 5.0});
  CHECK(peaks.entries[0].value == 0.8);

  // Below threshold, or on a plateau, nothing qualifies.
  auto low = bi_map(16);
  low.raw[low.bi.index(3, 5)] = 0.2;
  CHECK(find_peaks(low, det).entries.empty());
  auto flat = bi_map(16);
  for (auto& v : flat.raw) v = 0.5;
  CHECK(find_peaks(flat, det).entries.empty());
}

TEST_CASE("prominence requirement suppresses floor plateaus") {
  DetectionConfig det;
  auto m = bi_map(16);
  for (auto& v : m.raw) v = 0.45;
  m.raw[m.bi.index(4, 6)] = 0.8;
  CHECK(find_peaks(m, det).entries.empty());  // only 0.35 above the map median
  m.raw[m.bi.index(4, 6)] = 0.9;
  CHECK(find_peaks(m, det).entries.size() == 1);
}

TEST_CASE("peaks on symmetry boundaries are still found") {
  DetectionConfig det;
  auto m = bi_map(16);
  m.raw[m.bi.index(4, 4)] = 0.9;  // diagonal: some neighbors fold onto the cell
  m.raw[m.bi.index(1, 1)] = 0.7;  // corner: most neighbors leave the domain
  auto peaks = find_peaks(m, det);
  REQUIRE(peaks.entries.size() == 2);
  CHECK(peaks.entries[0].coords == std::vector<std::size_t>{4, 4});
  CHECK(peaks.entries[1].coords == std::vector<std::size_t>{1, 1});

  auto t = tri_map(32, 10);
  t.raw[t.tri.index(2, 3, 4)] = 0.9;
  t.raw[t.tri.index(5, 5, 5)] = 0.8;
  auto tp = find_peaks(t, det);
  REQUIRE(tp.entries.size() == 2);
  CHECK(tp.entries[0].coords == std::vector<std::size_t>{2, 3, 4});
  CHECK(tp.entries[1].coords == std::vector<std::size_t>{5, 5, 5});
}

TEST_CASE("classification follows the peak-pattern truth table") {
  DetectionConfig det;
  const auto bi = hos::CoherenceOrder::Bi;
  const auto tri = hos::CoherenceOrder::Tri;
  std::vector<std::string> warn;

  CHECK(classify(peaks_at(bi, {{8, 8}}), peaks_at(tri, {{8, 8, 8}}), 8.0, det, &warn) ==
        Classification::UnilateralSaturation);
  CHECK(warn.empty());

  CHECK(classify(peaks_at(bi, {}), peaks_at(tri, {{8, 8, 24}}), 8.0, det) ==
        Classification::BilateralSaturation);

  CHECK(classify(peaks_at(bi, {}), peaks_at(tri, {}), 8.0, det) ==
        Classification::NoHardLimitNonlinearity);

  // Bicoherence evidence with no tricoherence support still reads unilateral,
  // but the disagreement is surfaced.
  CHECK(classify(peaks_at(bi, {{8, 8}}), peaks_at(tri, {}), 8.0, det, &warn) ==
        Classification::UnilateralSaturation);
  REQUIRE(warn.size() == 1);
  CHECK(warn[0].find("inconsistent") != std::string::npos);

  // Off-grid peaks are reported but are not classification evidence.
  CHECK(classify(peaks_at(bi, {{6, 11}}), peaks_at(tri, {}), 8.0, det) ==
        Classification::NoHardLimitNonlinearity);

  // Even-harmonic tricoherence without bicoherence fits neither limiter.
  CHECK(classify(peaks_at(bi, {}), peaks_at(tri, {{8, 8, 16}}), 8.0, det) ==
        Classification::NoHardLimitNonlinearity);

  // Tolerance of one bin admits slightly shifted coordinates.
  CHECK(classify(peaks_at(bi, {{7, 9}}), peaks_at(tri, {{8, 9, 24}}), 8.0, det) ==
        Classification::UnilateralSaturation);
}

TEST_CASE("saturation readout inverts a synthetic spectrum exactly") {
  hos::PowerSpectrum p;
  p.df = 1.0;
  p.values.assign(32, 0.0);
  const double hd = hardlimit::hd2_unilateral({2.0});
  p.values[7] = 0.25;            // fundamental amplitude 1 under a unit window
  p.values[15] = 0.25 * hd * hd; // second harmonic at the eta = 2 ratio
  auto cfg = seg_cfg(1, 64);
  cfg.window = hos::Window::Rectangular;
  const auto est = estimate_saturation(p, 8.0, Classification::UnilateralSaturation, cfg);
  CHECK(est.hd == doctest::Approx(hd).epsilon(1e-12));
  CHECK(est.eta == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(est.fundamental_amplitude == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.harmonic_amplitude == doctest::Approx(hd).epsilon(1e-12));

  // Near-zero distortion reads as no saturation.
  p.values[15] = 1e-12;
  CHECK(estimate_saturation(p, 8.0, Classification::UnilateralSaturation, cfg).eta ==
        doctest::Approx(1.0).epsilon(1e-3));

  CHECK_THROWS_AS(estimate_saturation(p, 8.0, Classification::NoHardLimitNonlinearity, cfg),
                  Error);
  // Third harmonic of bin 20 leaves a 32-bin spectrum.
  CHECK_THROWS_AS(estimate_saturation(p, 20.0, Classification::BilateralSaturation, cfg), Error);
}

TEST_CASE("saturation level round-trips through generated records") {
  const double fs = 4000.0, f = 31.25;  // bin 8 of a 1024-point segment
  const auto cfg = seg_cfg(32, 1024);

  auto x = clipped_channel(2.0, LimitKind::Unilateral, f, fs, 32 * 1024, 0.0, 11);
  auto s = hos::segment_window_fft(x, cfg, fs);
  auto p = hos::power_spectrum(s);
  auto est = estimate_saturation(p, fundamental_frequency(p),
                                 Classification::UnilateralSaturation, cfg);
  CHECK(est.eta > 1.8);
  CHECK(est.eta < 2.2);

  x = clipped_channel(5.0, LimitKind::Bilateral, f, fs, 32 * 1024, 0.0, 12);
  s = hos::segment_window_fft(x, cfg, fs);
  p = hos::power_spectrum(s);
  est = estimate_saturation(p, fundamental_frequency(p), Classification::BilateralSaturation, cfg);
  CHECK(est.eta > 4.5);
  CHECK(est.eta < 5.5);
}

TEST_CASE("segmentation is chosen to put several cycles in each segment") {
  const double fs = 1000.0;
  const auto x = clipped_channel(2.0, LimitKind::Unilateral, 33.8, fs, 32768, 0.0, 5);
  const auto cfg = auto_segment_config(x, fs);
  CHECK(cfg.segment_len == 256);  // next power of two above 8 cycles at 33.8 Hz
  CHECK(cfg.segments == 128);

  const auto s = hos::segment_window_fft(x, cfg, fs);
  const double f0 = fundamental_frequency(hos::power_spectrum(s));
  CHECK(std::abs(f0 - 33.8) < 0.5 * fs / 256.0);

  // Broadband input falls back to a fixed segment length.
  CHECK(auto_segment_config(noise_channel(8192, 3), fs).segment_len == 256);
  CHECK_THROWS_AS(auto_segment_config(std::vector<double>(32, 0.0), fs), Error);
}

TEST_CASE("channel analysis classifies each limiter kind end to end") {
  const double fs = 4000.0, f = 31.25;
  const auto cfg = seg_cfg(64, 1024);
  DetectionConfig det;

  const auto uni =
      analyze_channel(clipped_channel(2.0, LimitKind::Unilateral, f, fs, 64 * 1024, 100.0, 21),
                      fs, Axis::D, cfg, det);
  CHECK(uni.report.classification == Classification::UnilateralSaturation);
  REQUIRE(uni.report.saturation.has_value());
  CHECK(uni.report.saturation->eta > 1.8);
  CHECK(uni.report.saturation->eta < 2.2);
  CHECK(std::abs(*uni.report.fundamental_hz - f) < 2.0);
  CHECK(!uni.report.bic_peaks.entries.empty());
  CHECK(!uni.report.tric_peaks.entries.empty());

  const auto bil =
      analyze_channel(clipped_channel(5.0, LimitKind::Bilateral, f, fs, 64 * 1024, 0.0, 22), fs,
                      Axis::D, cfg, det);
  CHECK(bil.report.classification == Classification::BilateralSaturation);
  REQUIRE(bil.report.saturation.has_value());
  CHECK(bil.report.saturation->eta > 4.5);
  CHECK(bil.report.saturation->eta < 5.5);

  // A clean sinusoid in noise has a fundamental but no coupled harmonics.
  GaussianRng rng(29);
  std::vector<double> sine(64 * 1024);
  for (std::size_t n = 0; n < sine.size(); ++n)
    sine[n] = 80.0 * std::sin(2.0 * kPi * f / fs * static_cast<double>(n)) + 3.0 * rng.next();
  const auto none = analyze_channel(sine, fs, Axis::D, cfg, det);
  CHECK(none.report.classification == Classification::NoHardLimitNonlinearity);
  CHECK(none.report.fundamental_hz.has_value());
  CHECK(!none.report.saturation.has_value());

  const auto quiet = analyze_channel(noise_channel(64 * 1024, 30), fs, Axis::Q, cfg, det);
  CHECK(quiet.report.classification == Classification::NoHardLimitNonlinearity);
  CHECK(!quiet.report.fundamental_hz.has_value());
  REQUIRE(!quiet.report.warnings.empty());
  CHECK(quiet.report.warnings[0].find("no dominant tone") != std::string::npos);
}

TEST_CASE("three-phase records route the d-axis limiter to the d report") {
  const double fs = 4000.0, f = 31.25;
  const std::size_t len = 64 * 1024;
  const auto xd = clipped_channel(2.0, LimitKind::Unilateral, f, fs, len, 100.0, 41);
  const auto xq = noise_channel(len, 42, 0.5);
  const std::vector<double> x0(len, 0.0);
  const auto rec = dq::inverse_dq0(xd, xq, x0, 1.0 / fs, 50.0, 0.5);

  AnalysisOptions opt;
  opt.segment = seg_cfg(64, 1024);
  const auto [d, q] = analyze(rec, opt);
  CHECK(d.report.axis == Axis::D);
  CHECK(d.report.classification == Classification::UnilateralSaturation);
  REQUIRE(d.report.saturation.has_value());
  CHECK(d.report.saturation->eta > 1.8);
  CHECK(d.report.saturation->eta < 2.2);
  CHECK(q.report.axis == Axis::Q);
  CHECK(q.report.classification == Classification::NoHardLimitNonlinearity);

  // Positive rescaling changes nothing downstream of the coherence maps.
  dq::WaveformRecord scaled = rec;
  for (auto* ch : {&scaled.ia, &scaled.ib, &scaled.ic})
    for (auto& v : *ch) v *= 1000.0;
  const auto [ds, qs] = analyze(scaled, opt);
  CHECK(ds.report.classification == Classification::UnilateralSaturation);
  CHECK(qs.report.classification == Classification::NoHardLimitNonlinearity);
  CHECK(ds.report.saturation->eta ==
        doctest::Approx(d.report.saturation->eta).epsilon(1e-9));
}

TEST_CASE("a low-pass in the measurement path does not change the verdict") {
  const double fs = 4000.0, f = 31.25;
  const auto xd = clipped_channel(2.0, LimitKind::Unilateral, f, fs, 64 * 1024, 0.0, 51);
  const synth::FilterSpec lp{synth::FilterSpec::Kind::FirstOrderLowPass, 200.0, fs};
  const auto filtered = synth::apply_filter(xd, lp);

  const auto cfg = seg_cfg(64, 1024);
  DetectionConfig det;
  const auto d0 = analyze_channel(xd, fs, Axis::D, cfg, det);
  const auto d1 = analyze_channel(filtered, fs, Axis::D, cfg, det);
  CHECK(d0.report.classification == Classification::UnilateralSaturation);
  CHECK(d1.report.classification == Classification::UnilateralSaturation);
  for (auto coords : {std::vector<std::size_t>{8, 8}, std::vector<std::size_t>{8, 16}}) {
    const Peak* p0 = peak_at(d0.report.bic_peaks, coords);
    const Peak* p1 = peak_at(d1.report.bic_peaks, coords);
    REQUIRE(p0 != nullptr);
    REQUIRE(p1 != nullptr);
    CHECK(std::abs(p0->value - p1->value) < 0.05);
  }
}

TEST_CASE("generic quadratic coupling shows peaks but no limiter signature") {
  synth::ToneSpec spec;
  spec.fs = 16.0;
  spec.length = 64 * 512;
  spec.tones = {{0.6381, 1.0, 0.0, synth::PhaseMode::Fixed},
                {0.8345, 1.0, 0.0, synth::PhaseMode::Fixed},
                {0.6381 + 0.8345, 0.5, 0.0, synth::PhaseMode::Fixed}};
  spec.phase_noise_db = -20.0;
  const auto x = synth::gen_tones(spec, 1234);

  const auto res = analyze_channel(x, 16.0, Axis::D, seg_cfg(64, 512), DetectionConfig{});
  CHECK(res.report.classification == Classification::NoHardLimitNonlinearity);
  const auto& entries = res.report.bic_peaks.entries;
  const bool has_coupling_peak =
      std::any_of(entries.begin(), entries.end(), [](const Peak& p) {
        return p.coords == std::vector<std::size_t>{20, 27};
      });
  CHECK(has_coupling_peak);
}

TEST_CASE("analysis is deterministic") {
  const double fs = 4000.0;
  const auto x = clipped_channel(2.0, LimitKind::Unilateral, 31.25, fs, 32 * 1024, 0.0, 77);
  const auto cfg = seg_cfg(32, 1024);
  DetectionConfig det;
  const auto a = analyze_channel(x, fs, Axis::D, cfg, det);
  const auto b = analyze_channel(x, fs, Axis::D, cfg, det);
  CHECK(a.report.classification == b.report.classification);
  CHECK(*a.report.fundamental_hz == *b.report.fundamental_hz);
  CHECK(a.report.saturation->eta == b.report.saturation->eta);
  REQUIRE(a.report.bic_peaks.entries.size() == b.report.bic_peaks.entries.size());
  for (std::size_t i = 0; i < a.report.bic_peaks.entries.size(); ++i) {
    CHECK(a.report.bic_peaks.entries[i].coords == b.report.bic_peaks.entries[i].coords);
    CHECK(a.report.bic_peaks.entries[i].value == b.report.bic_peaks.entries[i].value);
  }
  CHECK(a.power.values == b.power.values);
}

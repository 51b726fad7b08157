#include "hosdetect/synth.hpp"

#include <cmath>
#include <numbers>

#include "hosdetect/numeric.hpp"

namespace hosdetect::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// dB -> linear standard deviation for a power quantity.
double db_sigma(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace

void ToneSpec::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) fail(ErrorKind::Config, "fs must be positive");
  if (length == 0) fail(ErrorKind::Config, "length must be positive");
  bool any_segmented = false;
  for (const auto& t : tones) {
    if (!(t.freq_hz >= 0.0) || !(t.freq_hz < fs / 2.0))
      fail(ErrorKind::Config, "tone frequency must lie in [0, fs/2)");
    if (!(t.amplitude >= 0.0) || !std::isfinite(t.amplitude))
      fail(ErrorKind::Config, "tone amplitude must be nonnegative");
    if (!std::isfinite(t.phase)) fail(ErrorKind::Config, "tone phase must be finite");
    any_segmented = any_segmented || t.mode == PhaseMode::PerSegmentRandom;
  }
  if (any_segmented && segment_len == 0)
    fail(ErrorKind::Config, "segment_len required for per-segment random phases");
}

void FilterSpec::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) fail(ErrorKind::Config, "fs must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0))
    fail(ErrorKind::Config, "cutoff must lie in (0, fs/2)");
}

std::vector<double> gen_tones(const ToneSpec& spec, std::uint64_t seed) {
  spec.validate();
  numeric::GaussianRng rng(seed);
  std::vector<double> out(spec.length, 0.0);
  const double phase_sigma = spec.phase_noise_db == kNoiseOff ? 0.0 : db_sigma(spec.phase_noise_db);

  for (const auto& tone : spec.tones) {
    std::vector<double> seg_phase;
    if (tone.mode == PhaseMode::PerSegmentRandom) {
      const std::size_t segs = (spec.length + spec.segment_len - 1) / spec.segment_len;
      seg_phase.resize(segs);
      for (auto& p : seg_phase) p = kTwoPi * rng.uniform();
    }
    const double step = kTwoPi * tone.freq_hz / spec.fs;
    for (std::size_t n = 0; n < spec.length; ++n) {
      double phi = tone.phase;
      if (!seg_phase.empty()) phi = seg_phase[n / spec.segment_len];
      if (phase_sigma > 0.0) phi += phase_sigma * rng.next();
      out[n] += tone.amplitude * std::cos(step * static_cast<double>(n) + phi);
    }
  }

  if (spec.additive_noise_db != kNoiseOff) {
    const double sigma = db_sigma(spec.additive_noise_db);
    for (auto& v : out) v += sigma * rng.next();
  }
  return out;
}

std::vector<double> gen_clipped_sine(const hardlimit::SineInput& input, const hardlimit::HardLimitSpec& spec, double fs,
                                     std::size_t length, std::uint64_t seed, double noise_db) {
  input.validate();
  spec.validate();
  if (!(fs > 0.0) || !(input.freq_hz < fs / 2.0))
    fail(ErrorKind::Config, "frequency must lie below fs/2");
  if (length == 0) fail(ErrorKind::Config, "length must be positive");

  numeric::GaussianRng rng(seed);
  const double sigma =
      noise_db == kNoiseOff ? 0.0 : input.amplitude / std::numbers::sqrt2 * db_sigma(noise_db);
  const double step = kTwoPi * input.freq_hz / fs;
  std::vector<double> out(length);
  for (std::size_t n = 0; n < length; ++n) {
    double x = input.offset + input.amplitude * std::sin(step * static_cast<double>(n));
    if (sigma > 0.0) x += sigma * rng.next();
    out[n] = apply_limit(spec, x);
  }
  return out;
}

std::vector<double> apply_filter(std::span<const double> x, const FilterSpec& spec) {
  spec.validate();
  const double k = std::tan(std::numbers::pi * spec.cutoff_hz / spec.fs);
  const double b = k / (1.0 + k);
  const double a = (k - 1.0) / (k + 1.0);
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  double x1 = x[0];  // held-forever init: DC passes through from sample 0
  double y1 = x[0];
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double y = b * (x[n] + x1) - a * y1;
    out[n] = y;
    x1 = x[n];
    y1 = y;
  }
  return out;
}

std::complex<double> filter_response(double f_hz, const FilterSpec& spec) {
  spec.validate();
  const double k = std::tan(std::numbers::pi * spec.cutoff_hz / spec.fs);
  const double b = k / (1.0 + k);
  const double a = (k - 1.0) / (k + 1.0);
  const std::complex<double> zi = std::polar(1.0, -kTwoPi * f_hz / spec.fs);
  return b * (1.0 + zi) / (1.0 + a * zi);
}

}  // namespace hosdetect::synth

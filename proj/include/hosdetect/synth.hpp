#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hosdetect/common.hpp"
#include "hosdetect/hardlimit.hpp"

namespace hosdetect::synth {

inline constexpr double kNoiseOff = -std::numeric_limits<double>::infinity();

enum class PhaseMode {
  Fixed,             // base phase taken from the tone spec
  PerSegmentRandom,  // base phase redrawn independently per analysis segment
};

struct Tone {
  double freq_hz = 0.0;
  double amplitude = 1.0;
  double phase = 0.0;  // radians, base phase in Fixed mode
  PhaseMode mode = PhaseMode::Fixed;
};

struct ToneSpec {
  double fs = 0.0;
  std::size_t length = 0;
  std::vector<Tone> tones;
  // Per-sample Gaussian jitter inside each cosine argument; power in dB
  // relative to 1 rad^2 (-20 -> variance 0.01 rad^2). kNoiseOff disables.
  double phase_noise_db = kNoiseOff;
  // Additive Gaussian channel noise; power in dB relative to unit signal power.
  double additive_noise_db = kNoiseOff;
  // Analysis segment length; required whenever any tone is PerSegmentRandom.
  std::size_t segment_len = 0;
  void validate() const;
};

struct FilterSpec {
  enum class Kind { FirstOrderLowPass };
  Kind kind = Kind::FirstOrderLowPass;
  double cutoff_hz = 0.0;
  double fs = 0.0;
  void validate() const;  // 0 < cutoff_hz < fs/2
};

// Sum of cosines A_i cos(2*pi*f_i*n/fs + phi_i + w_i(n)). Deterministic given
// seed; the random stream is consumed tone-major (segment phases first, then
// per-sample jitter), then the additive channel noise.
std::vector<double> gen_tones(const ToneSpec& spec, std::uint64_t seed);

// Samplewise-limited sinusoid offset + A*sin(2*pi*f*n/fs), with optional
// Gaussian noise of variance (A^2/2)*10^(noise_db/10) added before the limit.
std::vector<double> gen_clipped_sine(const hardlimit::SineInput& input, const hardlimit::HardLimitSpec& spec, double fs,
                                     std::size_t length, std::uint64_t seed,
                                     double noise_db = kNoiseOff);

// Causal first-order low-pass via the bilinear transform, prewarped so the
// magnitude at cutoff_hz is exactly 1/sqrt(2). State is initialized as if the
// first sample had been held forever, so a DC input passes through unchanged.
std::vector<double> apply_filter(std::span<const double> x, const FilterSpec& spec);

// Exact frequency response of apply_filter's realization at f_hz.
std::complex<double> filter_response(double f_hz, const FilterSpec& spec);

}  // namespace hosdetect::synth

#pragma once

#include <complex>

#include "hosdetect/common.hpp"

namespace hosdetect::hardlimit {

enum class LimitKind { Bilateral, Unilateral };

// Bilateral: y = clamp(x, -a, a).  Unilateral: y = min(x, a0 + a), i.e. a
// one-sided clip at headroom a above the operating offset a0.
struct HardLimitSpec {
  LimitKind kind = LimitKind::Bilateral;
  double a = 1.0;
  double a0 = 0.0;  // must stay 0 for Bilateral
  void validate() const;
};

// x(theta) = offset + amplitude*sin(theta); freq_hz only labels the waveform.
struct SineInput {
  double amplitude = 1.0;
  double freq_hz = 0.0;
  double offset = 0.0;
  void validate() const;
};

// Coefficients of (1/pi)*integral over one period: an against cos(n*theta),
// bn against sin(n*theta). The n = 0 entry is therefore twice the DC level.
struct HarmonicCoefficients {
  int order = 0;
  double an = 0.0;
  double bn = 0.0;
};

// eta = A/a >= 1: how far the sine drive exceeds the clip level.
struct SaturationLevel {
  double eta = 1.0;
  void validate() const;
};

double apply_limit(const HardLimitSpec& spec, double x) noexcept;

// Closed forms exist for n <= 7 only; throws UnsupportedOrder above that.
// Bilateral requires offset == 0 (the symmetric clamp has no biased closed
// form here); Unilateral requires the offset to sit below the clip level.
// amplitude <= headroom degenerates to the unclipped passthrough.
HarmonicCoefficients fourier_closed_form(const HardLimitSpec& spec, const SineInput& in, int n);

// Independent oracle: composite Gauss-Legendre split at the clip crossings,
// >= 1e4 effective nodes per period. Any n in [0, 64].
HarmonicCoefficients fourier_quadrature(const HardLimitSpec& spec, const SineInput& in, int n);

// Third-over-first harmonic amplitude ratio of the symmetric clamp.
// Range [0, 1/3); 0 at eta = 1; monotone increasing.
double hd3_bilateral(SaturationLevel level);

// Second-over-first harmonic amplitude ratio of the one-sided clip.
// Range [0, 4/(3*pi)); 0 at eta = 1; monotone increasing.
double hd2_unilateral(SaturationLevel level);

// Bisection on eta in [1, 1e6]; residual below 1e-9. Throws OutOfRange for
// hd < 0 or hd at/above the asymptote of the chosen kind.
SaturationLevel invert_saturation(double hd, LimitKind kind);

// Fundamental complex gain N(A) for x = a0 + A*sin(theta): magnitude
// |Y1|/A, phase atan2(A1, B1) (zero when A1 = 0, B1 > 0). Real-valued for
// both limiter kinds; equals 1 for A <= headroom.
std::complex<double> describing_function(const HardLimitSpec& spec, double amplitude);

// Mean shift introduced by a one-sided clip at headroom a on A*sin(theta):
// (1/2pi)*integral(min(A sin, a) - A sin) <= 0. Zero for a >= A. Used by the
// limit-cycle predictor's bias balance.
double unilateral_dc_shift(double amplitude, double headroom);

}  // namespace hosdetect::hardlimit

#pragma once

#include <span>
#include <vector>

#include "hosdetect/common.hpp"

namespace hosdetect::dq {

struct WaveformRecord {
  double dt = 0.0;            // seconds per sample, > 0
  double nominal_freq = 0.0;  // Hz, > 0
  std::vector<double> ia, ib, ic;
  std::size_t size() const { return ia.size(); }
  void validate() const;  // equal channel lengths >= 2, finite values
};

struct DqSignal {
  std::vector<double> xd, xq, x0;
  double theta0 = 0.0;
  double omega = 0.0;  // rad/s, pinned to 2*pi*nominal_freq
};

struct Theta0Estimate {
  double theta0 = 0.0;     // (-pi, pi]
  double magnitude = 0.0;  // |fundamental positive-sequence coefficient|
  bool degenerate = false; // record has no fundamental to anchor the angle
};

// Argument of the fundamental coefficient of the positive-sequence combination
// (2/3)(ia + alpha*ib + alpha^2*ic), alpha = exp(j*2*pi/3), correlated against
// exp(-j*omega*t*dt) over the largest whole number of nominal cycles.
// Throws InsufficientData below one full cycle.
Theta0Estimate estimate_theta0(const WaveformRecord& rec);

// Loop alternative: q-axis-nulling phase tracker (kp + ki/s). Same angle
// convention; the offset is read as the circular mean over the settled tail.
Theta0Estimate estimate_theta0_pll(const WaveformRecord& rec, double kp = 500.0, double ki = 900.0);

// Amplitude-invariant rotating-frame projection at angle omega*t*dt + theta0,
// t = 0..L-1. A balanced cosine set at theta0 maps to xd = amplitude, xq = 0.
DqSignal dq0_transform(const WaveformRecord& rec, double theta0);

// Exact inverse for the same theta0; x0 may be empty (treated as zero).
WaveformRecord inverse_dq0(std::span<const double> xd, std::span<const double> xq,
                           std::span<const double> x0, double dt, double nominal_freq,
                           double theta0);

}  // namespace hosdetect::dq

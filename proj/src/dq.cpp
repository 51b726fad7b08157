#include "hosdetect/dq.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace hosdetect::dq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoThirdsPi = 2.0 * std::numbers::pi / 3.0;

double channel_rms(const WaveformRecord& rec) {
  double acc = 0.0;
  for (std::size_t t = 0; t < rec.size(); ++t)
    acc += rec.ia[t] * rec.ia[t] + rec.ib[t] * rec.ib[t] + rec.ic[t] * rec.ic[t];
  return std::sqrt(acc / (3.0 * static_cast<double>(rec.size())));
}

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a == -kPi ? kPi : a;
}

}  // namespace

void WaveformRecord::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Config, "dt must be positive");
  if (!(nominal_freq > 0.0) || !std::isfinite(nominal_freq))
    fail(ErrorKind::Config, "nominal_freq must be positive");
  if (ia.size() != ib.size() || ia.size() != ic.size())
    fail(ErrorKind::Config, "channel lengths differ");
  if (ia.size() < 2) fail(ErrorKind::InsufficientData, "record needs at least 2 samples");
}

Theta0Estimate estimate_theta0(const WaveformRecord& rec) {
  rec.validate();
  const double cycle_samples = 1.0 / (rec.nominal_freq * rec.dt);
  const auto cycles = std::floor(static_cast<double>(rec.size()) / cycle_samples);
  if (cycles < 1.0) fail(ErrorKind::InsufficientData, "record shorter than one nominal cycle");
  auto used = static_cast<std::size_t>(std::llround(cycles * cycle_samples));
  if (used > rec.size()) used = rec.size();

  const std::complex<double> alpha = std::polar(1.0, kTwoThirdsPi);
  const std::complex<double> alpha2 = alpha * alpha;
  const double omega = 2.0 * kPi * rec.nominal_freq;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t t = 0; t < used; ++t) {
    const std::complex<double> s =
        (2.0 / 3.0) * (rec.ia[t] + alpha * rec.ib[t] + alpha2 * rec.ic[t]);
    acc += s * std::polar(1.0, -omega * static_cast<double>(t) * rec.dt);
  }
  acc /= static_cast<double>(used);

  const double mag = std::abs(acc);
  const double rms = channel_rms(rec);
  if (mag <= 1e-15 * std::max(1.0, rms)) return {0.0, mag, true};
  return {std::atan2(acc.imag(), acc.real()), mag, false};
}

Theta0Estimate estimate_theta0_pll(const WaveformRecord& rec, double kp, double ki) {
  rec.validate();
  if (!(kp > 0.0) || !(ki >= 0.0)) fail(ErrorKind::Config, "pll gains must be positive");
  const double cycle_samples = 1.0 / (rec.nominal_freq * rec.dt);
  if (static_cast<double>(rec.size()) < cycle_samples)
    fail(ErrorKind::InsufficientData, "record shorter than one nominal cycle");

  const double omega0 = 2.0 * kPi * rec.nominal_freq;
  double theta = 0.0;
  double integ = 0.0;
  std::vector<double> offset(rec.size());
  for (std::size_t t = 0; t < rec.size(); ++t) {
    const double c0 = std::cos(theta), s0 = std::sin(theta);
    const double cm = std::cos(theta - kTwoThirdsPi), sm = std::sin(theta - kTwoThirdsPi);
    const double cp = std::cos(theta + kTwoThirdsPi), sp = std::sin(theta + kTwoThirdsPi);
    const double xd = (2.0 / 3.0) * (c0 * rec.ia[t] + cm * rec.ib[t] + cp * rec.ic[t]);
    const double xq = -(2.0 / 3.0) * (s0 * rec.ia[t] + sm * rec.ib[t] + sp * rec.ic[t]);
    const double norm = std::hypot(xd, xq);
    const double err = norm > 0.0 ? xq / norm : 0.0;  // -sin(tracking error)
    integ += ki * err * rec.dt;
    theta += (omega0 + kp * err + integ) * rec.dt;
    offset[t] = theta - omega0 * static_cast<double>(t + 1) * rec.dt;
  }

  // Circular mean over the settled tail; the loop at (500, 900) converges in
  // well under a cycle, so the last quarter of the record is past transients.
  std::complex<double> acc{0.0, 0.0};
  const std::size_t tail = rec.size() - rec.size() / 4;
  for (std::size_t t = tail; t < rec.size(); ++t) acc += std::polar(1.0, offset[t]);
  if (std::abs(acc) <= 1e-15) return {0.0, 0.0, true};
  const double rms = channel_rms(rec);
  if (rms <= 0.0) return {0.0, 0.0, true};
  return {std::atan2(acc.imag(), acc.real()), std::abs(acc) / static_cast<double>(rec.size() - tail),
          false};
}

DqSignal dq0_transform(const WaveformRecord& rec, double theta0) {
  rec.validate();
  if (!std::isfinite(theta0)) fail(ErrorKind::Config, "theta0 must be finite");
  const double omega = 2.0 * kPi * rec.nominal_freq;
  DqSignal out;
  out.theta0 = wrap_pi(theta0);
  out.omega = omega;
  const std::size_t n = rec.size();
  out.xd.resize(n);
  out.xq.resize(n);
  out.x0.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double th = omega * static_cast<double>(t) * rec.dt + theta0;
    const double c0 = std::cos(th), s0 = std::sin(th);
    const double cm = std::cos(th - kTwoThirdsPi), sm = std::sin(th - kTwoThirdsPi);
    const double cp = std::cos(th + kTwoThirdsPi), sp = std::sin(th + kTwoThirdsPi);
    out.xd[t] = (2.0 / 3.0) * (c0 * rec.ia[t] + cm * rec.ib[t] + cp * rec.ic[t]);
    out.xq[t] = -(2.0 / 3.0) * (s0 * rec.ia[t] + sm * rec.ib[t] + sp * rec.ic[t]);
    out.x0[t] = (rec.ia[t] + rec.ib[t] + rec.ic[t]) / 3.0;
  }
  return out;
}

WaveformRecord inverse_dq0(std::span<const double> xd, std::span<const double> xq,
                           std::span<const double> x0, double dt, double nominal_freq,
                           double theta0) {
  if (xd.size() != xq.size()) fail(ErrorKind::Config, "xd/xq lengths differ");
  if (!x0.empty() && x0.size() != xd.size()) fail(ErrorKind::Config, "x0 length differs");
  WaveformRecord rec;
  rec.dt = dt;
  rec.nominal_freq = nominal_freq;
  const double omega = 2.0 * kPi * nominal_freq;
  const std::size_t n = xd.size();
  rec.ia.resize(n);
  rec.ib.resize(n);
  rec.ic.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double th = omega * static_cast<double>(t) * dt + theta0;
    const double z = x0.empty() ? 0.0 : x0[t];
    rec.ia[t] = std::cos(th) * xd[t] - std::sin(th) * xq[t] + z;
    rec.ib[t] = std::cos(th - kTwoThirdsPi) * xd[t] - std::sin(th - kTwoThirdsPi) * xq[t] + z;
    rec.ic[t] = std::cos(th + kTwoThirdsPi) * xd[t] - std::sin(th + kTwoThirdsPi) * xq[t] + z;
  }
  rec.validate();
  return rec;
}

}  // namespace hosdetect::dq

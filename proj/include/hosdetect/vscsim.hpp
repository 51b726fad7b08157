#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hosdetect/common.hpp"
#include "hosdetect/hardlimit.hpp"

namespace hosdetect::vscsim {

struct PiGains {
  double kp = 0.0;
  double ki = 0.0;
};

// The four places Fig-4-style converter control can saturate: the current
// reference out of each outer voltage/power loop, and the voltage command
// out of each inner current loop.
enum class LimitSite { DOuter, QOuter, DInner, QInner };
inline constexpr std::size_t kLimitSites = 4;

// Additive sinusoidal excitation at a limiter site's pre-limit summing
// junction, for measuring loop transfer functions in situ.
struct Injection {
  LimitSite site = LimitSite::DOuter;
  double amplitude = 0.0;
  double freq_hz = 0.0;
};

// Timestamped controller retune; only gains change mid-run.
struct Event {
  double t = 0.0;
  std::optional<PiGains> gi;
  std::optional<PiGains> gdc;
  std::optional<PiGains> gq;
};

// Reduced averaged dq model of a grid-side VSC: RL output stage with ideal
// decoupling, inner current PIs, DC-bus energy balance closed by the d-axis
// outer PI, reactive-power q-axis outer PI. The terminal voltage is treated
// as stiff (Rg/Lg kept as parameters but not simulated) and the PLL as
// perfectly synchronized. No PWM, no switching.
//
// States: [id, iq, edc, xi_d, xi_q, zeta_dc, zeta_q] where edc = C*vdc^2/2
// is the bus energy (its deviation maps linearly to vdc about the
// operating point) and xi/zeta are the inner/outer PI integrators.
struct VscLoopSpec {
  double R = 0.001;        // connection resistance, ohm
  double L = 0.35e-3;      // connection inductance, H
  double Rg = 0.005;       // grid-side resistance, ohm (parameter only)
  double Lg = 0.4e-3;      // grid-side inductance, H (parameter only)
  double C = 0.2;          // DC-link capacitance, F
  double omega0 = 100.0 * 3.14159265358979323846;  // grid frequency, rad/s
  double v_term = 563.38;  // terminal phase voltage amplitude, V
  double vdc_ref = 1200.0; // DC bus reference, V
  double p_in = 0.34e6;    // power delivered into the DC bus, W
  double q_ref = 0.0;      // reactive power reference, VAr

  PiGains gi{0.012, 12.5};  // inner current loops
  PiGains gdc{9.0, 500.0};  // d-axis outer (DC voltage) loop
  // q-axis outer loop. Its error is the reactive mismatch expressed in
  // current units, (q_ref - 1.5*v_term*iq)/(1.5*v_term), so the gains are
  // commensurate with the d-axis outer loop's current output.
  PiGains gq{0.3, 50.28};

  std::array<std::optional<hardlimit::HardLimitSpec>, kLimitSites> limits;

  // With the outer loops open the current references are held constant.
  bool outer_loops = true;
  std::optional<double> id_ref;  // defaults to the operating-point current
  double iq_ref = 0.0;

  double dt_sim = 50e-6;
  double id_perturbation = 0.0;  // added to id at t = 0
  std::optional<Injection> injection;
  double divergence_bound = 1e7;

  // d-axis current that balances p_in at the terminal voltage.
  double operating_id() const { return p_in / (1.5 * v_term); }

  // Positivity of the passive parameters and gains where required, plus
  // dt_sim * |fastest closed-loop eigenvalue| < 0.1.
  void validate() const;
};

// Uniformly sampled simulation output. idref_raw/idref are the d-outer PI
// output before/after its limiter, vdbar the d-inner limiter output; they
// expose the saturation ground truth alongside the terminal quantities.
struct SimRecord {
  double dt = 0.0;
  std::vector<double> id, iq, vdc;
  std::vector<double> idref_raw, idref, vdbar;
  std::size_t size() const { return id.size(); }
};

// Fixed-step trapezoidal integration, implicit in the linear dynamics with
// the limiter outputs advanced by an explicit predictor. Events retune the
// controllers at their timestamps. Throws NumericalDivergence when any
// state magnitude exceeds divergence_bound.
SimRecord simulate(const VscLoopSpec& spec, double duration, std::span<const Event> events = {});

// Keep every factor-th sample.
SimRecord decimate(const SimRecord& rec, std::size_t factor);

// Rational transfer function in ascending powers of s.
struct RationalTf {
  std::vector<double> num;
  std::vector<double> den;
  std::complex<double> eval(std::complex<double> s) const;
  void validate() const;  // proper, nonzero leading denominator coefficient
};

// The scalar loop a limiter sees: limiter output -> g(s) -> (negative
// feedback) -> limiter input. When the loop integrators pin the limiter
// output's mean to the operating point (true for the d-outer site, where
// the bus energy balance forces mean(id) to the power setpoint),
// bias_balanced makes the predictor solve the clip bias self-consistently.
struct LureLoopSpec {
  RationalTf g;
  hardlimit::HardLimitSpec limiter;
  bool bias_balanced = false;
};

struct LimitCyclePrediction {
  double freq_hz = 0.0;
  double amplitude = 0.0;  // fundamental amplitude at the limiter input
  double eta = 1.0;        // amplitude over effective headroom
};

// First-harmonic balance N(A) g(jw) = -1: scans for phase crossings of g,
// then solves the amplitude on the describing function. nullopt when no
// crossing admits a sustained oscillation.
std::optional<LimitCyclePrediction> predict_limit_cycle(const LureLoopSpec& loop);

// The loop transfer seen by the d-outer limiter: i_dref -> closed inner
// current loop -> bus energy integrator -> outer PI.
LureLoopSpec d_outer_lure_loop(const VscLoopSpec& spec);

// Table-II-style parameter set with the DC-voltage proportional gain raised
// until the linearized loop is unstable, a one-sided clip 80 A above the
// operating current on the d-outer site, and a small seed perturbation: the
// divergent oscillation settles into a unilateral limit cycle.
VscLoopSpec case2_reduced_preset();

}  // namespace hosdetect::vscsim

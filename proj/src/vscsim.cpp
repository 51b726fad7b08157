#include "hosdetect/vscsim.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace hosdetect::vscsim {

namespace {

constexpr double kPi = std::numbers::pi;

using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat74 = Eigen::Matrix<double, 7, 4>;
using Mat47 = Eigen::Matrix<double, 4, 7>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

// State order: id, iq, edc, xi_d, xi_q, zeta_dc, zeta_q.
// Input order:  vdbar, vqbar, idref, iqref (the four limiter outputs).
enum { Id, Iq, Edc, XiD, XiQ, ZDc, ZQ };
enum { UVd, UVq, UId, UIq };

struct Gains {
  PiGains gi, gdc, gq;
};

struct Model {
  const VscLoopSpec* spec = nullptr;
  Gains g;
  Mat7 a = Mat7::Zero();
  Mat74 b = Mat74::Zero();
  Vec7 c = Vec7::Zero();
  Mat47 k = Mat47::Zero();  // linear (limiter-free) input maps
  Vec4 k0 = Vec4::Zero();

  void build(const VscLoopSpec& s, const Gains& gains) {
    spec = &s;
    g = gains;
    const double v15 = 1.5 * s.v_term;
    const double ev = 1.0 / (s.C * s.vdc_ref);  // d(vdc)/d(edc) about the setpoint

    a.setZero();
    b.setZero();
    c.setZero();
    a(Id, Id) = -s.R / s.L;
    b(Id, UVd) = 1.0 / s.L;
    a(Iq, Iq) = -s.R / s.L;
    b(Iq, UVq) = 1.0 / s.L;
    a(Edc, Id) = -v15;
    c(Edc) = s.p_in;
    a(XiD, Id) = -g.gi.ki;
    b(XiD, UId) = g.gi.ki;
    a(XiQ, Iq) = -g.gi.ki;
    b(XiQ, UIq) = g.gi.ki;
    a(ZDc, Edc) = g.gdc.ki * ev;
    c(ZDc) = -g.gdc.ki * s.vdc_ref / 2.0;  // -ki * e_ref / (C vdc_ref)
    a(ZQ, Iq) = -g.gq.ki;  // reactive error normalized to current units
    c(ZQ) = g.gq.ki * s.q_ref / v15;

    k.setZero();
    k0.setZero();
    if (s.outer_loops) {
      k(UId, Edc) = g.gdc.kp * ev;
      k(UId, ZDc) = 1.0;
      k0(UId) = -g.gdc.kp * s.vdc_ref / 2.0;
      k(UIq, Iq) = -g.gq.kp;
      k(UIq, ZQ) = 1.0;
      k0(UIq) = g.gq.kp * s.q_ref / v15;
    } else {
      k0(UId) = s.id_ref.value_or(s.operating_id());
      k0(UIq) = s.iq_ref;
    }
    k.row(UVd) = g.gi.kp * k.row(UId);
    k(UVd, Id) -= g.gi.kp;
    k(UVd, XiD) += 1.0;
    k0(UVd) = g.gi.kp * k0(UId);
    k.row(UVq) = g.gi.kp * k.row(UIq);
    k(UVq, Iq) -= g.gi.kp;
    k(UVq, XiQ) += 1.0;
    k0(UVq) = g.gi.kp * k0(UIq);
  }

  Mat7 closed_linear() const { return a + b * k; }

  double inject(LimitSite site, double t) const {
    const auto& inj = spec->injection;
    if (!inj || inj->site != site) return 0.0;
    return inj->amplitude * std::sin(2.0 * kPi * inj->freq_hz * t);
  }

  double limited(LimitSite site, double raw) const {
    const auto& lim = spec->limits[static_cast<std::size_t>(site)];
    return lim ? hardlimit::apply_limit(*lim, raw) : raw;
  }

  // Limiter outputs for state x at time t; raw_idref reports the d-outer
  // pre-limit signal for the record.
  Vec4 inputs(const Vec7& x, double t, double* raw_idref = nullptr) const {
    Vec4 u;
    const double uid = k.row(UId).dot(x) + k0(UId) + inject(LimitSite::DOuter, t);
    if (raw_idref != nullptr) *raw_idref = uid;
    u(UId) = limited(LimitSite::DOuter, uid);
    const double uiq = k.row(UIq).dot(x) + k0(UIq) + inject(LimitSite::QOuter, t);
    u(UIq) = limited(LimitSite::QOuter, uiq);
    const double uvd =
        g.gi.kp * (u(UId) - x(Id)) + x(XiD) + inject(LimitSite::DInner, t);
    u(UVd) = limited(LimitSite::DInner, uvd);
    const double uvq =
        g.gi.kp * (u(UIq) - x(Iq)) + x(XiQ) + inject(LimitSite::QInner, t);
    u(UVq) = limited(LimitSite::QInner, uvq);
    return u;
  }
};

struct Stepper {
  Model model;
  double dt = 0.0;
  Mat7 forward;  // I + dt/2 A
  Eigen::PartialPivLU<Mat7> lu;  // factors I - dt/2 A

  void rebuild(const VscLoopSpec& spec, const Gains& g, double step) {
    model.build(spec, g);
    dt = step;
    const Mat7 half = 0.5 * dt * model.a;
    forward = Mat7::Identity() + half;
    lu.compute(Mat7::Identity() - half);
  }

  void advance(Vec7& x, double t) const {
    const Vec4 u0 = model.inputs(x, t);
    const Vec7 xp = x + dt * (model.a * x + model.b * u0 + model.c);
    const Vec4 u1 = model.inputs(xp, t + dt);
    x = lu.solve(forward * x + (0.5 * dt) * model.b * (u0 + u1) + dt * model.c);
  }
};

Vec7 equilibrium(const VscLoopSpec& spec) {
  const double id0 = spec.outer_loops ? spec.operating_id()
                                      : spec.id_ref.value_or(spec.operating_id());
  const double iq0 = spec.outer_loops ? spec.q_ref / (1.5 * spec.v_term) : spec.iq_ref;
  Vec7 x;
  x(Id) = id0;
  x(Iq) = iq0;
  x(Edc) = 0.5 * spec.C * spec.vdc_ref * spec.vdc_ref;
  x(XiD) = spec.R * id0;
  x(XiQ) = spec.R * iq0;
  x(ZDc) = id0;
  x(ZQ) = iq0;
  return x;
}

void check_pi(const PiGains& g, const char* name) {
  if (!(g.kp >= 0.0) || !(g.ki >= 0.0) || !(g.kp + g.ki > 0.0))
    fail(ErrorKind::Config, std::string(name) + " gains must be nonnegative and not both zero");
}

double bisect(double lo, double hi, const auto& f) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo < 0.0) == (fm < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Self-consistent headroom of a one-sided clip whose output mean is pinned
// by the loop integrators: h = a + shift(A, h), shift <= 0.
std::optional<double> balanced_headroom(double amplitude, double a) {
  const auto g = [&](double h) {
    return h - a - hardlimit::unilateral_dc_shift(amplitude, h);
  };
  const double lo = 1e-12 * a;
  if (!(g(lo) < 0.0)) return std::nullopt;  // amplitude >= pi * a: no balance
  if (!(g(a) >= 0.0)) return std::nullopt;
  return bisect(lo, a, g);
}

struct AmplitudeSolution {
  double amplitude;
  double eta;
};

// Solve N(A) = target on the monotone-decreasing describing function of the
// limiter, in deviation coordinates (a0 = 0).
std::optional<AmplitudeSolution> solve_amplitude(const hardlimit::HardLimitSpec& lim,
                                                 bool bias_balanced, double target) {
  if (!(target > 0.0) || !(target < 1.0)) return std::nullopt;
  const double a = lim.a;
  hardlimit::HardLimitSpec local{lim.kind, a, 0.0};

  if (lim.kind == hardlimit::LimitKind::Bilateral) {
    const auto f = [&](double A) {
      return hardlimit::describing_function(local, A).real() - target;
    };
    const double lo = a * (1.0 + 1e-12), hi = a * 1e9;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) return std::nullopt;
    const double A = bisect(lo, hi, f);
    return AmplitudeSolution{A, A / a};
  }

  if (bias_balanced) {
    // The effective headroom shrinks with amplitude; the composed gain falls
    // from 1 toward 1/2 at the bias-balance existence boundary A = pi a.
    const auto f = [&](double A) -> double {
      const auto h = balanced_headroom(A, a);
      if (!h) return -1.0;
      hardlimit::HardLimitSpec eff{hardlimit::LimitKind::Unilateral, *h, 0.0};
      return hardlimit::describing_function(eff, A).real() - target;
    };
    const double lo = a * (1.0 + 1e-9), hi = kPi * a * (1.0 - 1e-9);
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) return std::nullopt;
    const double A = bisect(lo, hi, f);
    const auto h = balanced_headroom(A, a);
    if (!h) return std::nullopt;
    return AmplitudeSolution{A, A / *h};
  }

  const auto f = [&](double A) {
    return hardlimit::describing_function(local, A).real() - target;
  };
  const double lo = a * (1.0 + 1e-12), hi = a * 1e9;
  if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) return std::nullopt;
  const double A = bisect(lo, hi, f);
  return AmplitudeSolution{A, A / a};
}

std::vector<double> conv(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

}  // namespace

void VscLoopSpec::validate() const {
  for (const double v : {R, L, Rg, Lg, C, omega0, v_term, vdc_ref, dt_sim})
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::Config, "passive parameters and dt_sim must be positive");
  if (!std::isfinite(p_in) || !std::isfinite(q_ref))
    fail(ErrorKind::Config, "power references must be finite");
  check_pi(gi, "inner current");
  check_pi(gdc, "dc voltage");
  check_pi(gq, "reactive power");
  for (const auto& lim : limits)
    if (lim) lim->validate();
  if (injection) {
    if (!(injection->amplitude >= 0.0) || !(injection->freq_hz > 0.0))
      fail(ErrorKind::Config, "injection needs nonnegative amplitude and positive frequency");
  }
  if (!(divergence_bound > 0.0)) fail(ErrorKind::Config, "divergence bound must be positive");

  Model m;
  m.build(*this, Gains{gi, gdc, gq});
  const Eigen::EigenSolver<Mat7> eig(m.closed_linear());
  const double fastest = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(dt_sim * fastest < 0.1))
    fail(ErrorKind::Config, "dt_sim too coarse for the fastest closed-loop eigenvalue");
}

SimRecord simulate(const VscLoopSpec& spec, double duration, std::span<const Event> events) {
  spec.validate();
  if (!(duration > 0.0)) fail(ErrorKind::Config, "duration must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(duration / spec.dt_sim));
  if (steps == 0) fail(ErrorKind::Config, "duration shorter than one step");

  std::vector<Event> ev(events.begin(), events.end());
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  Gains g{spec.gi, spec.gdc, spec.gq};
  Stepper st;
  st.rebuild(spec, g, spec.dt_sim);

  Vec7 x = equilibrium(spec);
  x(Id) += spec.id_perturbation;

  SimRecord out;
  out.dt = spec.dt_sim;
  for (auto* ch : {&out.id, &out.iq, &out.vdc, &out.idref_raw, &out.idref, &out.vdbar})
    ch->reserve(steps + 1);

  const double e_ref = 0.5 * spec.C * spec.vdc_ref * spec.vdc_ref;
  const auto record = [&](const Vec7& s, double t) {
    double raw = 0.0;
    const Vec4 u = st.model.inputs(s, t, &raw);
    out.id.push_back(s(Id));
    out.iq.push_back(s(Iq));
    out.vdc.push_back(spec.vdc_ref + (s(Edc) - e_ref) / (spec.C * spec.vdc_ref));
    out.idref_raw.push_back(raw);
    out.idref.push_back(u(UId));
    out.vdbar.push_back(u(UVd));
  };

  std::size_t next_ev = 0;
  record(x, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * spec.dt_sim;
    while (next_ev < ev.size() && ev[next_ev].t <= t + 1e-12) {
      if (ev[next_ev].gi) g.gi = *ev[next_ev].gi;
      if (ev[next_ev].gdc) g.gdc = *ev[next_ev].gdc;
      if (ev[next_ev].gq) g.gq = *ev[next_ev].gq;
      st.rebuild(spec, g, spec.dt_sim);
      ++next_ev;
    }
    st.advance(x, t);
    if (x.cwiseAbs().maxCoeff() > spec.divergence_bound)
      fail(ErrorKind::NumericalDivergence,
           "state exceeded divergence bound at t = " + std::to_string(t + spec.dt_sim));
    record(x, t + spec.dt_sim);
  }
  return out;
}

SimRecord decimate(const SimRecord& rec, std::size_t factor) {
  if (factor == 0) fail(ErrorKind::Config, "decimation factor must be positive");
  SimRecord out;
  out.dt = rec.dt * static_cast<double>(factor);
  for (auto [src, dst] :
       {std::pair{&rec.id, &out.id}, {&rec.iq, &out.iq}, {&rec.vdc, &out.vdc},
        {&rec.idref_raw, &out.idref_raw}, {&rec.idref, &out.idref}, {&rec.vdbar, &out.vdbar}}) {
    dst->reserve((src->size() + factor - 1) / factor);
    for (std::size_t i = 0; i < src->size(); i += factor) dst->push_back((*src)[i]);
  }
  return out;
}

std::complex<double> RationalTf::eval(std::complex<double> s) const {
  const auto horner = [&](const std::vector<double>& p) {
    std::complex<double> acc{0.0, 0.0};
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * s + *it;
    return acc;
  };
  return horner(num) / horner(den);
}

void RationalTf::validate() const {
  if (num.empty() || den.empty()) fail(ErrorKind::Config, "empty transfer function");
  if (den.back() == 0.0) fail(ErrorKind::Config, "denominator leading coefficient is zero");
  if (num.size() > den.size()) fail(ErrorKind::Config, "transfer function must be proper");
}

std::optional<LimitCyclePrediction> predict_limit_cycle(const LureLoopSpec& loop) {
  loop.g.validate();
  loop.limiter.validate();

  const auto g_at = [&](double w) { return loop.g.eval({0.0, w}); };

  // Phase crossings of the negative real axis: Im g = 0 with Re g < 0.
  constexpr int kPoints = 6000;
  const double w_lo = 1e-3, w_hi = 1e6;
  double prev_w = w_lo;
  std::complex<double> prev = g_at(prev_w);
  for (int i = 1; i <= kPoints; ++i) {
    const double w = w_lo * std::pow(w_hi / w_lo, static_cast<double>(i) / kPoints);
    const std::complex<double> cur = g_at(w);
    const bool flips = (prev.imag() < 0.0) != (cur.imag() < 0.0);
    if (flips && prev.real() < 0.0 && cur.real() < 0.0) {
      const double wz = bisect(prev_w, w, [&](double wm) { return g_at(wm).imag(); });
      const std::complex<double> gz = g_at(wz);
      if (gz.real() < 0.0) {
        const double target = -1.0 / gz.real();  // N(A) |g| = 1 at -180 degrees
        if (const auto sol = solve_amplitude(loop.limiter, loop.bias_balanced, target))
          return LimitCyclePrediction{wz / (2.0 * kPi), sol->amplitude, sol->eta};
      }
    }
    prev_w = w;
    prev = cur;
  }
  return std::nullopt;
}

LureLoopSpec d_outer_lure_loop(const VscLoopSpec& spec) {
  const auto& lim = spec.limits[static_cast<std::size_t>(LimitSite::DOuter)];
  if (!lim) fail(ErrorKind::Config, "no d-outer limiter configured");

  const double kv = 1.5 * spec.v_term / (spec.C * spec.vdc_ref);
  LureLoopSpec loop;
  loop.g.num = conv({spec.gdc.ki, spec.gdc.kp}, {spec.gi.ki, spec.gi.kp});
  for (auto& v : loop.g.num) v *= kv;
  loop.g.den = {0.0, 0.0, spec.gi.ki, spec.R + spec.gi.kp, spec.L};
  loop.limiter = hardlimit::HardLimitSpec{lim->kind, lim->a, 0.0};
  loop.bias_balanced = lim->kind == hardlimit::LimitKind::Unilateral;
  return loop;
}

VscLoopSpec case2_reduced_preset() {
  VscLoopSpec spec;
  spec.gdc = PiGains{12.0, 500.0};
  spec.limits[static_cast<std::size_t>(LimitSite::DOuter)] =
      hardlimit::HardLimitSpec{hardlimit::LimitKind::Unilateral, 80.0, spec.operating_id()};
  spec.id_perturbation = 5.0;
  return spec;
}

}  // namespace hosdetect::vscsim

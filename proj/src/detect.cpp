#include "hosdetect/detect.hpp"

#include <algorithm>
#include <cmath>

#include "hosdetect/numeric.hpp"

namespace hosdetect::detect {

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Multiple of the fundamental bin k0 that `bin` sits on, within tol bins.
std::optional<long long> harmonic_multiple(std::size_t bin, double k0, double tol) {
  const auto r = std::llround(static_cast<double>(bin) / k0);
  if (r < 1) return std::nullopt;
  if (std::abs(static_cast<double>(bin) - static_cast<double>(r) * k0) > tol) return std::nullopt;
  return r;
}

bool on_grid(const Peak& p, double k0, double tol, bool odd_only) {
  for (std::size_t c : p.coords) {
    const auto r = harmonic_multiple(c, k0, tol);
    if (!r || (odd_only && *r % 2 == 0)) return false;
  }
  return true;
}

double window_power(const hos::SegmentConfig& cfg) {
  const auto w = hos::make_window(cfg.window, cfg.segment_len);
  double acc = 0.0;
  for (double v : w) acc += v * v;
  return acc / static_cast<double>(cfg.segment_len);
}

std::size_t floor_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p * 2 <= v) p *= 2;
  return p;
}

void sort_peaks(std::vector<Peak>& entries) {
  std::sort(entries.begin(), entries.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.coords < b.coords;
  });
}

}  // namespace

void DetectionConfig::validate() const {
  if (!(sigma_b > 0.0) || !(sigma_b < 1.0)) fail(ErrorKind::Config, "sigma_b must lie in (0, 1)");
  if (!(harmonic_tol >= 0.0)) fail(ErrorKind::Config, "harmonic_tol must be nonnegative");
  if (!(min_prominence >= 0.0)) fail(ErrorKind::Config, "min_prominence must be nonnegative");
}

double fundamental_frequency(const hos::PowerSpectrum& p) {
  if (p.values.empty()) fail(ErrorKind::Config, "empty power spectrum");
  const auto mx = std::max_element(p.values.begin(), p.values.end());
  const double med = median(p.values);
  if (!(*mx > 10.0 * med) || !(*mx > 0.0))
    fail(ErrorKind::NoDominantTone, "no bin exceeds 10x the median power");

  const std::size_t b = static_cast<std::size_t>(mx - p.values.begin()) + 1;
  double delta = 0.0;
  if (b > 1 && b < p.half()) {
    const double ym = p.values[b - 2], y0 = p.values[b - 1], yp = p.values[b];
    const double denom = ym - 2.0 * y0 + yp;
    if (denom != 0.0) delta = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
  }
  return (static_cast<double>(b) + delta) * p.df;
}

PeakList find_peaks(const hos::CoherenceMap& map, const DetectionConfig& cfg) {
  cfg.validate();
  PeakList out;
  out.order = map.order;
  out.df = map.df;

  const bool tri = map.order == hos::CoherenceOrder::Tri;
  const int dims = tri ? 3 : 2;
  auto cell_index = [&](const long long* c) -> std::optional<std::size_t> {
    std::size_t s[3];
    for (int i = 0; i < dims; ++i) {
      if (c[i] < 1) return std::nullopt;
      s[i] = static_cast<std::size_t>(c[i]);
    }
    std::sort(s, s + dims);
    if (tri) {
      if (!map.tri.contains(s[0], s[1], s[2])) return std::nullopt;
      return map.tri.index(s[0], s[1], s[2]);
    }
    if (!map.bi.contains(s[0], s[1])) return std::nullopt;
    return map.bi.index(s[0], s[1]);
  };

  // Prominence is measured against the map-wide median, which tracks the
  // incoherent floor; immediate neighbors would also reject genuine peaks
  // whose spectral leakage raises the surrounding cells.
  const double floor_level = map.raw.empty() ? 0.0 : median(map.raw);

  auto visit = [&](const std::size_t* coords, std::size_t self) {
    const double v = map.raw[self];
    if (v < cfg.sigma_b || v < floor_level + cfg.min_prominence) return;
    bool strict = true;
    bool any_neighbor = false;
    long long c[3];
    const int lo = -1, hi = 1;
    for (int dm = lo; dm <= hi && strict; ++dm)
      for (int dn = lo; dn <= hi && strict; ++dn)
        for (int dk = tri ? lo : 0; dk <= (tri ? hi : 0) && strict; ++dk) {
          if (dm == 0 && dn == 0 && dk == 0) continue;
          c[0] = static_cast<long long>(coords[0]) + dm;
          c[1] = static_cast<long long>(coords[1]) + dn;
          c[2] = tri ? static_cast<long long>(coords[2]) + dk : 0;
          const auto idx = cell_index(c);
          if (!idx || *idx == self) continue;  // outside the domain, or folded onto self
          any_neighbor = true;
          if (map.raw[*idx] >= v) strict = false;
        }
    if (!strict || !any_neighbor) return;
    Peak p;
    p.value = std::min(v, 1.0);
    for (int i = 0; i < dims; ++i) {
      p.coords.push_back(coords[i]);
      p.freqs_hz.push_back(static_cast<double>(coords[i]) * map.df);
    }
    out.entries.push_back(std::move(p));
  };

  if (tri) {
    const auto& d = map.tri;
    std::size_t idx = 0;
    for (std::size_t m = 1; m <= d.cap; ++m)
      for (std::size_t n = m; n <= d.cap && m + 2 * n <= d.half; ++n) {
        const std::size_t o_max = std::min(d.cap, d.half - m - n);
        if (o_max < n) continue;
        for (std::size_t o = n; o <= o_max; ++o, ++idx) {
          const std::size_t coords[3] = {m, n, o};
          visit(coords, idx);
        }
      }
  } else {
    const auto& d = map.bi;
    std::size_t idx = 0;
    for (std::size_t m = 1; 2 * m <= d.half; ++m)
      for (std::size_t n = m; m + n <= d.half; ++n, ++idx) {
        const std::size_t coords[2] = {m, n};
        visit(coords, idx);
      }
  }
  sort_peaks(out.entries);
  return out;
}

Classification classify(const PeakList& bic_peaks, const PeakList& tric_peaks, double f0_hz,
                        const DetectionConfig& cfg, std::vector<std::string>* warnings) {
  cfg.validate();
  if (!(f0_hz > 0.0)) fail(ErrorKind::Config, "fundamental frequency must be positive");
  if (bic_peaks.df != tric_peaks.df) fail(ErrorKind::Config, "peak lists from different grids");
  const double k0 = f0_hz / bic_peaks.df;

  const auto any_grid = [&](const PeakList& peaks, bool odd_only) {
    return std::any_of(peaks.entries.begin(), peaks.entries.end(), [&](const Peak& p) {
      return on_grid(p, k0, cfg.harmonic_tol, odd_only);
    });
  };
  const bool bic_grid = any_grid(bic_peaks, false);
  const bool tric_grid = any_grid(tric_peaks, false);
  const bool tric_odd = any_grid(tric_peaks, true);

  if (bic_grid && tric_grid) return Classification::UnilateralSaturation;
  if (bic_grid) {
    if (warnings != nullptr)
      warnings->push_back(
          "inconsistent evidence: bicoherence peaks without tricoherence support");
    return Classification::UnilateralSaturation;
  }
  if (tric_odd) return Classification::BilateralSaturation;
  return Classification::NoHardLimitNonlinearity;
}

SaturationEstimate estimate_saturation(const hos::PowerSpectrum& p, double f0_hz,
                                       Classification cls, const hos::SegmentConfig& cfg) {
  if (cls == Classification::NoHardLimitNonlinearity)
    fail(ErrorKind::Config, "saturation level undefined without a detected limiter");
  if (!(f0_hz > 0.0)) fail(ErrorKind::Config, "fundamental frequency must be positive");
  const bool unilateral = cls == Classification::UnilateralSaturation;
  const double k0 = f0_hz / p.df;
  const auto b1 = std::llround(k0);
  const auto bh = std::llround(static_cast<double>(unilateral ? 2 : 3) * k0);
  if (b1 < 1 || bh + 1 > static_cast<long long>(p.half()))
    fail(ErrorKind::OutOfRange, "harmonic bins leave the spectrum");

  const auto energy = [&](long long b) {
    double acc = 0.0;
    for (long long k = std::max<long long>(1, b - 1);
         k <= std::min<long long>(static_cast<long long>(p.half()), b + 1); ++k)
      acc += p.at(static_cast<std::size_t>(k));
    return acc;
  };
  const double s1 = energy(b1);
  const double sh = energy(bh);
  if (!(s1 > 0.0)) fail(ErrorKind::OutOfRange, "no power at the fundamental");

  SaturationEstimate est;
  est.hd = std::sqrt(sh / s1);
  est.eta = hardlimit::invert_saturation(est.hd, unilateral ? hardlimit::LimitKind::Unilateral
                                                            : hardlimit::LimitKind::Bilateral)
                .eta;
  const double u2 = window_power(cfg);
  est.fundamental_amplitude = 2.0 * std::sqrt(s1 / u2);
  est.harmonic_amplitude = 2.0 * std::sqrt(sh / u2);
  return est;
}

hos::SegmentConfig auto_segment_config(std::span<const double> x, double fs) {
  if (!(fs > 0.0)) fail(ErrorKind::Config, "fs must be positive");
  if (x.size() < 64) fail(ErrorKind::InsufficientData, "record too short to segment");

  // The coarse pass averages several segments: a single periodogram of
  // broadband noise routinely has a max above 10x its median, which would
  // defeat the dominant-tone gate.
  std::size_t npre = floor_pow2(std::min<std::size_t>(x.size() / 8, 65536));
  std::size_t mpre = 8;
  if (npre < 64) {
    npre = floor_pow2(x.size());
    mpre = 1;
  }
  double fhat = 0.0;
  {
    hos::SegmentConfig pre;
    pre.segments = mpre;
    pre.segment_len = npre;
    try {
      fhat = fundamental_frequency(hos::power_spectrum(
          hos::segment_window_fft(x.first(mpre * npre), pre, fs)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoDominantTone) throw;
    }
  }

  std::size_t n = fhat > 0.0
                      ? numeric::next_pow2(static_cast<std::size_t>(std::ceil(8.0 * fs / fhat)))
                      : 256;
  n = std::clamp<std::size_t>(n, 128, 4096);
  while (n > 64 && x.size() / n < 4) n /= 2;

  hos::SegmentConfig cfg;
  cfg.segment_len = n;
  cfg.segments = std::min<std::size_t>(x.size() / n, 256);
  cfg.validate(x.size());
  return cfg;
}

ChannelAnalysis analyze_channel(std::span<const double> x, double fs, Axis axis,
                                const std::optional<hos::SegmentConfig>& seg,
                                const DetectionConfig& det) {
  det.validate();
  ChannelAnalysis out;
  out.config = seg ? *seg : auto_segment_config(x, fs);
  const auto s = hos::segment_window_fft(x, out.config, fs);
  out.power = hos::power_spectrum(s);
  out.bispec = hos::bispectrum(s);
  out.trispec = hos::trispectrum(s, out.config);
  out.bic = hos::bicoherence(out.power, out.bispec);
  out.tric = hos::tricoherence(out.power, out.trispec);

  auto& rep = out.report;
  rep.axis = axis;
  rep.bic_peaks = find_peaks(out.bic, det);
  rep.tric_peaks = find_peaks(out.tric, det);
  try {
    rep.fundamental_hz = fundamental_frequency(out.power);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoDominantTone) throw;
    rep.warnings.push_back("power spectrum: no dominant tone");
  }
  if (rep.fundamental_hz) {
    rep.classification =
        classify(rep.bic_peaks, rep.tric_peaks, *rep.fundamental_hz, det, &rep.warnings);
    if (rep.classification != Classification::NoHardLimitNonlinearity) {
      try {
        rep.saturation =
            estimate_saturation(out.power, *rep.fundamental_hz, rep.classification, out.config);
      } catch (const Error& e) {
        rep.warnings.push_back(std::string("saturation estimate: ") + e.what());
      }
    }
  }
  return out;
}

std::pair<ChannelAnalysis, ChannelAnalysis> analyze(const dq::WaveformRecord& rec,
                                                    const AnalysisOptions& opt) {
  rec.validate();
  double theta0 = 0.0;
  std::vector<std::string> prelude;
  if (opt.theta0) {
    theta0 = *opt.theta0;
  } else {
    const auto est = dq::estimate_theta0(rec);
    theta0 = est.theta0;
    if (est.degenerate)
      prelude.push_back("rotation angle: no positive-sequence fundamental; using theta0 = 0");
  }
  const auto sig = dq::dq0_transform(rec, theta0);
  const double fs = 1.0 / rec.dt;
  auto d = analyze_channel(sig.xd, fs, Axis::D, opt.segment, opt.detection);
  auto q = analyze_channel(sig.xq, fs, Axis::Q, opt.segment, opt.detection);
  d.report.warnings.insert(d.report.warnings.begin(), prelude.begin(), prelude.end());
  q.report.warnings.insert(q.report.warnings.begin(), prelude.begin(), prelude.end());
  return {std::move(d), std::move(q)};
}

std::pair<ChannelAnalysis, ChannelAnalysis> analyze_dq(std::span<const double> xd,
                                                       std::span<const double> xq, double fs,
                                                       const AnalysisOptions& opt) {
  auto d = analyze_channel(xd, fs, Axis::D, opt.segment, opt.detection);
  auto q = analyze_channel(xq, fs, Axis::Q, opt.segment, opt.detection);
  return {std::move(d), std::move(q)};
}

}  // namespace hosdetect::detect

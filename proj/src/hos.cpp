#include "hosdetect/hos.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace hosdetect::hos {

namespace {

constexpr std::size_t kNpos = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kDefaultTriCap = 128;

// FFTW planning is not thread-safe; plans are cached per length and executed
// through the new-array interface (FFTW_UNALIGNED keeps that legal).
class FftPlanCache {
 public:
  void execute(std::vector<double>& in, std::vector<std::complex<double>>& out) {
    const std::size_t n = in.size();
    fftw_plan plan;
    {
      std::scoped_lock lock(mu_);
      auto it = plans_.find(n);
      if (it == plans_.end()) {
        std::vector<double> tmp_in(n);
        std::vector<std::complex<double>> tmp_out(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), tmp_in.data(),
                                    reinterpret_cast<fftw_complex*>(tmp_out.data()),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) fail(ErrorKind::Config, "fft planning failed");
        plans_.emplace(n, plan);
      } else {
        plan = it->second;
      }
    }
    out.resize(n / 2 + 1);
    fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  std::mutex mu_;
  std::map<std::size_t, fftw_plan> plans_;
};

FftPlanCache& plan_cache() {
  static FftPlanCache cache;
  return cache;
}

}  // namespace

std::size_t SegmentConfig::tri_cap() const {
  return max_tri_bin == 0 ? std::min(half(), kDefaultTriCap) : max_tri_bin;
}

double SegmentConfig::replacement_scale() const {
  return floor_replacement.value_or(sigma_floor * sigma_floor);
}

void SegmentConfig::validate(std::size_t record_len) const {
  if (segments < 1) fail(ErrorKind::Config, "need at least one segment");
  if (segment_len < 4) fail(ErrorKind::Config, "segment_len must be at least 4");
  if (segment_len % 2 != 0) fail(ErrorKind::Config, "segment_len must be even");
  if (segments > record_len / segment_len)
    fail(ErrorKind::InsufficientData, "record shorter than segments * segment_len");
  if (!(sigma_floor > 0.0) || !(sigma_floor < 1.0))
    fail(ErrorKind::Config, "sigma_floor must lie in (0, 1)");
  if (floor_replacement && (!(*floor_replacement > 0.0) || !(*floor_replacement <= 1.0)))
    fail(ErrorKind::Config, "floor_replacement must lie in (0, 1]");
  if (max_tri_bin > half()) fail(ErrorKind::Config, "max_tri_bin exceeds segment_len / 2");
}

std::complex<double> SegmentSpectra::at(std::size_t seg, std::size_t bin) const {
  if (seg >= segments || bin < 1 || bin > half())
    fail(ErrorKind::OutOfRange, "segment spectrum index out of range");
  return bins[seg * half() + bin - 1];
}

std::size_t BiDomain::size() const {
  std::size_t n = 0;
  for (std::size_t m = 1; 2 * m <= half; ++m) n += half - 2 * m + 1;
  return n;
}

bool BiDomain::contains(std::size_t m, std::size_t n) const {
  return m >= 1 && m <= n && m + n <= half;
}

std::size_t BiDomain::index(std::size_t m, std::size_t n) const {
  if (!contains(m, n)) fail(ErrorKind::OutOfRange, "bispectrum cell outside canonical domain");
  return (m - 1) * (half + 1 - m) + (n - m);
}

TriDomain TriDomain::make(std::size_t half, std::size_t cap) {
  TriDomain d;
  d.half = half;
  d.cap = cap;
  d.row_base.assign(cap * cap, kNpos);
  std::size_t idx = 0;
  for (std::size_t m = 1; m <= cap; ++m)
    for (std::size_t n = m; n <= cap && m + 2 * n <= half; ++n) {
      const std::size_t o_max = std::min(cap, half - m - n);
      if (o_max < n) continue;
      d.row_base[(m - 1) * cap + (n - 1)] = idx;
      idx += o_max - n + 1;
    }
  d.total = idx;
  return d;
}

bool TriDomain::contains(std::size_t m, std::size_t n, std::size_t o) const {
  return m >= 1 && m <= n && n <= o && o <= cap && m + n + o <= half;
}

std::size_t TriDomain::index(std::size_t m, std::size_t n, std::size_t o) const {
  if (!contains(m, n, o)) fail(ErrorKind::OutOfRange, "trispectrum cell outside canonical domain");
  return row_base[(m - 1) * cap + (n - 1)] + (o - n);
}

double PowerSpectrum::at(std::size_t bin) const {
  if (bin < 1 || bin > values.size()) fail(ErrorKind::OutOfRange, "power bin out of range");
  return values[bin - 1];
}

bool BispectrumGrid::contains(std::size_t m, std::size_t n) const {
  return dom.contains(std::min(m, n), std::max(m, n));
}

std::complex<double> BispectrumGrid::at(std::size_t m, std::size_t n) const {
  return cells[dom.index(std::min(m, n), std::max(m, n))];
}

bool TrispectrumGrid::contains(std::size_t m, std::size_t n, std::size_t o) const {
  std::size_t c[3] = {m, n, o};
  std::sort(c, c + 3);
  return dom.contains(c[0], c[1], c[2]);
}

std::complex<double> TrispectrumGrid::at(std::size_t m, std::size_t n, std::size_t o) const {
  std::size_t c[3] = {m, n, o};
  std::sort(c, c + 3);
  return cells[dom.index(c[0], c[1], c[2])];
}

bool CoherenceMap::contains(std::size_t m, std::size_t n) const {
  return order == CoherenceOrder::Bi && bi.contains(std::min(m, n), std::max(m, n));
}

bool CoherenceMap::contains(std::size_t m, std::size_t n, std::size_t o) const {
  if (order != CoherenceOrder::Tri) return false;
  std::size_t c[3] = {m, n, o};
  std::sort(c, c + 3);
  return tri.contains(c[0], c[1], c[2]);
}

double CoherenceMap::raw_at(std::size_t m, std::size_t n) const {
  if (order != CoherenceOrder::Bi) fail(ErrorKind::OutOfRange, "map holds tricoherence");
  return raw[bi.index(std::min(m, n), std::max(m, n))];
}

double CoherenceMap::raw_at(std::size_t m, std::size_t n, std::size_t o) const {
  if (order != CoherenceOrder::Tri) fail(ErrorKind::OutOfRange, "map holds bicoherence");
  std::size_t c[3] = {m, n, o};
  std::sort(c, c + 3);
  return raw[tri.index(c[0], c[1], c[2])];
}

double CoherenceMap::at(std::size_t m, std::size_t n) const {
  return std::min(raw_at(m, n), 1.0);
}

double CoherenceMap::at(std::size_t m, std::size_t n, std::size_t o) const {
  return std::min(raw_at(m, n, o), 1.0);
}

std::vector<double> make_window(Window w, std::size_t n) {
  std::vector<double> win(n, 1.0);
  if (w == Window::Hann && n > 1) {
    for (std::size_t l = 0; l < n; ++l)
      win[l] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(l) /
                                     static_cast<double>(n - 1)));
  }
  return win;
}

SegmentSpectra segment_window_fft(std::span<const double> x, const SegmentConfig& cfg, double fs) {
  cfg.validate(x.size());
  if (!(fs > 0.0) || !std::isfinite(fs)) fail(ErrorKind::Config, "fs must be positive");

  const std::size_t n = cfg.segment_len;
  const std::size_t half = cfg.half();
  const auto win = make_window(cfg.window, n);

  SegmentSpectra out;
  out.segments = cfg.segments;
  out.segment_len = n;
  out.df = fs / static_cast<double>(n);
  out.bins.resize(cfg.segments * half);

  double wsum = 0.0;
  for (double v : win) wsum += v;

  std::vector<double> seg(n);
  std::vector<std::complex<double>> spec;
  for (std::size_t i = 0; i < cfg.segments; ++i) {
    std::copy_n(x.data() + i * n, n, seg.data());

    if (cfg.mean_before_window) {
      double mean = 0.0;
      for (double v : seg) mean += v;
      mean /= static_cast<double>(n);
      for (std::size_t l = 0; l < n; ++l) seg[l] = (seg[l] - mean) * win[l];
    } else {
      // Removing the mean after windowing must still annihilate a constant
      // input, so the subtracted term is the window-weighted mean scaled by
      // the window; a plain scalar subtraction would leave DC leakage in the
      // first bins of any tapered window.
      for (std::size_t l = 0; l < n; ++l) seg[l] *= win[l];
      double mean = 0.0;
      for (double v : seg) mean += v;
      mean /= wsum;
      for (std::size_t l = 0; l < n; ++l) seg[l] -= mean * win[l];
    }

    plan_cache().execute(seg, spec);

    auto* row = out.bins.data() + i * half;
    double mx = 0.0;
    for (std::size_t k = 1; k <= half; ++k) {
      row[k - 1] = spec[k] / static_cast<double>(n);
      mx = std::max(mx, std::abs(row[k - 1]));
    }
    if (mx > 0.0) {
      const double thr = cfg.sigma_floor * mx;
      const double repl = cfg.replacement_scale() * mx;
      for (std::size_t k = 0; k < half; ++k)
        if (std::abs(row[k]) < thr) row[k] = std::polar(repl, std::arg(row[k]));
    }
  }
  return out;
}

PowerSpectrum power_spectrum(const SegmentSpectra& s) {
  PowerSpectrum p;
  p.df = s.df;
  p.values.assign(s.half(), 0.0);
  for (std::size_t i = 0; i < s.segments; ++i) {
    const auto* row = s.bins.data() + i * s.half();
    for (std::size_t k = 0; k < s.half(); ++k) p.values[k] += std::norm(row[k]);
  }
  for (double& v : p.values) v /= static_cast<double>(s.segments);
  return p;
}

BispectrumGrid bispectrum(const SegmentSpectra& s) {
  BispectrumGrid b;
  b.df = s.df;
  b.dom.half = s.half();
  b.cells.assign(b.dom.size(), {0.0, 0.0});
  for (std::size_t i = 0; i < s.segments; ++i) {
    const auto* row = s.bins.data() + i * s.half();
    std::size_t idx = 0;
    for (std::size_t m = 1; 2 * m <= b.dom.half; ++m)
      for (std::size_t n = m; m + n <= b.dom.half; ++n, ++idx)
        b.cells[idx] += row[m - 1] * row[n - 1] * std::conj(row[m + n - 1]);
  }
  for (auto& c : b.cells) c /= static_cast<double>(s.segments);
  return b;
}

TrispectrumGrid trispectrum(const SegmentSpectra& s, const SegmentConfig& cfg) {
  if (cfg.tri_cap() > s.half()) fail(ErrorKind::Config, "max_tri_bin exceeds segment_len / 2");
  TrispectrumGrid t;
  t.df = s.df;
  t.dom = TriDomain::make(s.half(), cfg.tri_cap());
  t.cells.assign(t.dom.size(), {0.0, 0.0});
  for (std::size_t i = 0; i < s.segments; ++i) {
    const auto* row = s.bins.data() + i * s.half();
    std::size_t idx = 0;
    for (std::size_t m = 1; m <= t.dom.cap; ++m)
      for (std::size_t n = m; n <= t.dom.cap && m + 2 * n <= t.dom.half; ++n) {
        const std::size_t o_max = std::min(t.dom.cap, t.dom.half - m - n);
        if (o_max < n) continue;
        const std::complex<double> mn = row[m - 1] * row[n - 1];
        for (std::size_t o = n; o <= o_max; ++o, ++idx)
          t.cells[idx] += mn * row[o - 1] * std::conj(row[m + n + o - 1]);
      }
  }
  for (auto& c : t.cells) c /= static_cast<double>(s.segments);
  return t;
}

CoherenceMap bicoherence(const PowerSpectrum& p, const BispectrumGrid& b) {
  if (p.half() != b.dom.half) fail(ErrorKind::Config, "power and bispectrum grids differ");
  CoherenceMap map;
  map.order = CoherenceOrder::Bi;
  map.df = b.df;
  map.bi = b.dom;
  map.raw.assign(b.cells.size(), 0.0);
  std::size_t idx = 0;
  for (std::size_t m = 1; 2 * m <= b.dom.half; ++m)
    for (std::size_t n = m; m + n <= b.dom.half; ++n, ++idx) {
      const double denom =
          std::sqrt(p.values[m + n - 1] * p.values[m - 1] * p.values[n - 1]);
      map.raw[idx] = denom > 0.0 ? std::abs(b.cells[idx]) / denom : 0.0;
    }
  return map;
}

CoherenceMap tricoherence(const PowerSpectrum& p, const TrispectrumGrid& t) {
  if (p.half() != t.dom.half) fail(ErrorKind::Config, "power and trispectrum grids differ");
  CoherenceMap map;
  map.order = CoherenceOrder::Tri;
  map.df = t.df;
  map.tri = t.dom;
  map.raw.assign(t.cells.size(), 0.0);
  std::size_t idx = 0;
  for (std::size_t m = 1; m <= t.dom.cap; ++m)
    for (std::size_t n = m; n <= t.dom.cap && m + 2 * n <= t.dom.half; ++n) {
      const std::size_t o_max = std::min(t.dom.cap, t.dom.half - m - n);
      if (o_max < n) continue;
      for (std::size_t o = n; o <= o_max; ++o, ++idx) {
        const double denom = std::sqrt(p.values[m + n + o - 1] * p.values[m - 1] *
                                       p.values[n - 1] * p.values[o - 1]);
        map.raw[idx] = denom > 0.0 ? std::abs(t.cells[idx]) / denom : 0.0;
      }
    }
  return map;
}

}  // namespace hosdetect::hos

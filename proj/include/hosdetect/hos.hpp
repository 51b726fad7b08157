#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hosdetect/common.hpp"

namespace hosdetect::hos {

enum class Window { Hann, Rectangular };

struct SegmentConfig {
  std::size_t segments = 0;     // M
  std::size_t segment_len = 0;  // N, even
  Window window = Window::Hann;
  // Per-segment floor: bins below sigma_floor * max|X| are replaced by a value
  // of magnitude floor_replacement * max|X| with phase preserved.
  double sigma_floor = 1e-3;
  std::optional<double> floor_replacement;  // defaults to sigma_floor^2
  std::size_t max_tri_bin = 0;              // 0 = min(segment_len/2, 128)
  bool mean_before_window = false;          // conventional order; default is window first
  std::size_t half() const { return segment_len / 2; }
  std::size_t tri_cap() const;
  double replacement_scale() const;
  void validate(std::size_t record_len) const;
};

struct SegmentSpectra {
  std::size_t segments = 0;
  std::size_t segment_len = 0;
  double df = 0.0;  // Hz per bin
  // segments rows of half() coefficients each, bin k of segment i at
  // bins[i * half() + (k - 1)], k = 1..half().
  std::vector<std::complex<double>> bins;
  std::size_t half() const { return segment_len / 2; }
  std::complex<double> at(std::size_t seg, std::size_t bin) const;
};

// Canonical bispectrum support {1 <= m <= n, m + n <= half}; the full plane
// is recovered through the (m,n) <-> (n,m) exchange.
struct BiDomain {
  std::size_t half = 0;
  std::size_t size() const;
  bool contains(std::size_t m, std::size_t n) const;       // canonical coords
  std::size_t index(std::size_t m, std::size_t n) const;   // canonical coords
};

// Canonical trispectrum support {1 <= m <= n <= o <= cap, m + n + o <= half};
// the full octant is recovered through coordinate permutations.
struct TriDomain {
  std::size_t half = 0;
  std::size_t cap = 0;
  std::size_t total = 0;
  std::vector<std::size_t> row_base;  // (m,n) -> flat index of (m,n,n), npos outside
  static TriDomain make(std::size_t half, std::size_t cap);
  std::size_t size() const { return total; }
  bool contains(std::size_t m, std::size_t n, std::size_t o) const;      // canonical coords
  std::size_t index(std::size_t m, std::size_t n, std::size_t o) const;  // canonical coords
};

struct PowerSpectrum {
  double df = 0.0;
  std::vector<double> values;  // bin m at values[m - 1], m = 1..half
  std::size_t half() const { return values.size(); }
  double at(std::size_t bin) const;
};

struct BispectrumGrid {
  double df = 0.0;
  BiDomain dom;
  std::vector<std::complex<double>> cells;
  bool contains(std::size_t m, std::size_t n) const;
  std::complex<double> at(std::size_t m, std::size_t n) const;  // symmetry-extended
};

struct TrispectrumGrid {
  double df = 0.0;
  TriDomain dom;
  std::vector<std::complex<double>> cells;
  bool contains(std::size_t m, std::size_t n, std::size_t o) const;
  std::complex<double> at(std::size_t m, std::size_t n, std::size_t o) const;
};

enum class CoherenceOrder { Bi, Tri };

// Normalized coupling strength on the source grid's canonical domain. Raw
// values can exceed 1 for finite samples; at() clamps to [0, 1], raw_at()
// reports the estimate untouched.
struct CoherenceMap {
  CoherenceOrder order = CoherenceOrder::Bi;
  double df = 0.0;
  BiDomain bi;    // populated when order == Bi
  TriDomain tri;  // populated when order == Tri
  std::vector<double> raw;
  bool contains(std::size_t m, std::size_t n) const;
  bool contains(std::size_t m, std::size_t n, std::size_t o) const;
  double raw_at(std::size_t m, std::size_t n) const;
  double raw_at(std::size_t m, std::size_t n, std::size_t o) const;
  double at(std::size_t m, std::size_t n) const;
  double at(std::size_t m, std::size_t n, std::size_t o) const;
};

std::vector<double> make_window(Window w, std::size_t n);

// Splits x into M contiguous non-overlapping segments, windows, removes the
// per-segment mean (after windowing unless cfg says otherwise), applies the
// 1/N-normalized DFT keeping bins 1..N/2, then applies the spectral floor.
SegmentSpectra segment_window_fft(std::span<const double> x, const SegmentConfig& cfg, double fs);

PowerSpectrum power_spectrum(const SegmentSpectra& s);
BispectrumGrid bispectrum(const SegmentSpectra& s);
TrispectrumGrid trispectrum(const SegmentSpectra& s, const SegmentConfig& cfg);

// |B(m,n)| / sqrt(P(m+n) P(m) P(n)); zero denominators (possible only for an
// identically zero segment set, which defeats the floor) give value 0.
CoherenceMap bicoherence(const PowerSpectrum& p, const BispectrumGrid& b);
// |T(m,n,o)| / sqrt(P(m+n+o) P(m) P(n) P(o)); same zero-denominator rule.
CoherenceMap tricoherence(const PowerSpectrum& p, const TrispectrumGrid& t);

}  // namespace hosdetect::hos

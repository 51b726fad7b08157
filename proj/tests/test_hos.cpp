#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "hosdetect/hardlimit.hpp"
#include "hosdetect/hos.hpp"
#include "hosdetect/numeric.hpp"
#include "hosdetect/synth.hpp"

using namespace hosdetect;
using namespace hosdetect::hos;
using numeric::GaussianRng;

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

// Reference implementation of the whole segment pipeline: direct O(N^2) DFT,
// window, mean removal and floor, written independently of the library path.
std::vector<cplx> brute_segment(std::span<const double> raw, const SegmentConfig& cfg) {
  const std::size_t n = cfg.segment_len;
  auto win = make_window(cfg.window, n);
  std::vector<double> seg(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(n));
  if (cfg.mean_before_window) {
    double m = 0.0;
    for (double v : seg) m += v;
    m /= static_cast<double>(n);
    for (std::size_t l = 0; l < n; ++l) seg[l] = (seg[l] - m) * win[l];
  } else {
    // Weighted-mean removal, so a constant input vanishes under any window.
    for (std::size_t l = 0; l < n; ++l) seg[l] *= win[l];
    double m = 0.0, ws = 0.0;
    for (double v : seg) m += v;
    for (double v : win) ws += v;
    m /= ws;
    for (std::size_t l = 0; l < n; ++l) seg[l] -= m * win[l];
  }
  std::vector<cplx> bins(n / 2);
  double mx = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t l = 0; l < n; ++l)
      acc += seg[l] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * l) /
                                          static_cast<double>(n));
    bins[k - 1] = acc / static_cast<double>(n);
    mx = std::max(mx, std::abs(bins[k - 1]));
  }
  if (mx > 0.0) {
    for (auto& b : bins)
      if (std::abs(b) < cfg.sigma_floor * mx)
        b = std::polar(cfg.replacement_scale() * mx, std::arg(b));
  }
  return bins;
}

std::vector<double> gaussian_record(std::size_t len, std::uint64_t seed, double sigma = 1.0) {
  GaussianRng rng(seed);
  std::vector<double> x(len);
  for (auto& v : x) v = sigma * rng.next();
  return x;
}

synth::ToneSpec case_i_spec(std::size_t segments, double phi3, synth::PhaseMode mode3) {
  synth::ToneSpec spec;
  spec.fs = 16.0;
  spec.length = segments * 512;
  spec.segment_len = 512;
  spec.tones = {{0.6381, 1.0, 0.0, synth::PhaseMode::Fixed},
                {0.8345, 1.0, 0.0, synth::PhaseMode::Fixed},
                {0.6381 + 0.8345, 0.5, phi3, mode3}};
  spec.phase_noise_db = -20.0;
  return spec;
}

}  // namespace

TEST_CASE("hann window is symmetric with zero endpoints") {
  const auto w = make_window(Window::Hann, 64);
  CHECK(w[0] == 0.0);
  CHECK(w[63] == doctest::Approx(0.0).scale(1.0));
  for (std::size_t l = 0; l < 64; ++l) CHECK(w[l] == doctest::Approx(w[63 - l]).epsilon(1e-12));
  CHECK(*std::max_element(w.begin(), w.end()) == doctest::Approx(1.0).epsilon(1e-3));
  const auto r = make_window(Window::Rectangular, 8);
  for (double v : r) CHECK(v == 1.0);
}

TEST_CASE("on-bin sine under a rectangular window fills exactly one bin") {
  const std::size_t n = 64;
  std::vector<double> x(n);
  for (std::size_t l = 0; l < n; ++l)
    x[l] = std::sin(2.0 * kPi * 5.0 * static_cast<double>(l) / static_cast<double>(n));
  SegmentConfig cfg;
  cfg.segments = 1;
  cfg.segment_len = n;
  cfg.window = Window::Rectangular;
  const auto s = segment_window_fft(x, cfg, 64.0);
  CHECK(s.df == doctest::Approx(1.0));
  CHECK(std::abs(s.at(0, 5)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 5).imag() == doctest::Approx(-0.5).epsilon(1e-12));
  // Everything else is leakage-free zero, so it lands on the floor value.
  for (std::size_t k = 1; k <= n / 2; ++k) {
    if (k == 5) continue;
    CHECK(std::abs(s.at(0, k)) == doctest::Approx(1e-6 * 0.5).epsilon(1e-6));
  }
}

TEST_CASE("hann window scales an on-bin tone by its coherent gain") {
  const std::size_t n = 256;
  std::vector<double> x(n);
  for (std::size_t l = 0; l < n; ++l)
    x[l] = std::cos(2.0 * kPi * 8.0 * static_cast<double>(l) / static_cast<double>(n));
  SegmentConfig cfg;
  cfg.segments = 1;
  cfg.segment_len = n;
  const auto s = segment_window_fft(x, cfg, static_cast<double>(n));
  const double coherent_gain = 0.5 - 0.5 / static_cast<double>(n);  // mean of the window
  CHECK(std::abs(s.at(0, 8)) == doctest::Approx(0.5 * coherent_gain).epsilon(1e-3));
}

TEST_CASE("dc-only input is annihilated by mean removal") {
  std::vector<double> x(128, 3.0);
  for (const Window w : {Window::Rectangular, Window::Hann}) {
    for (const bool before : {false, true}) {
      SegmentConfig cfg;
      cfg.segments = 2;
      cfg.segment_len = 64;
      cfg.window = w;
      cfg.mean_before_window = before;
      const auto s = segment_window_fft(x, cfg, 64.0);
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 1; k <= 32; ++k) CHECK(std::abs(s.at(i, k)) < 1e-13);
    }
  }
}

TEST_CASE("floor replaces quiet bins with phase preserved") {
  const std::size_t n = 64;
  std::vector<double> x(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double t = static_cast<double>(l) / static_cast<double>(n);
    x[l] = std::sin(2.0 * kPi * 4.0 * t) + 1e-5 * std::sin(2.0 * kPi * 9.0 * t + 0.7);
  }
  SegmentConfig cfg;
  cfg.segments = 1;
  cfg.segment_len = n;
  cfg.window = Window::Rectangular;
  const auto s = segment_window_fft(x, cfg, 64.0);
  CHECK(std::abs(s.at(0, 9)) == doctest::Approx(1e-6 * 0.5).epsilon(1e-9));
  CHECK(std::arg(s.at(0, 9)) == doctest::Approx(0.7 - kPi / 2.0).epsilon(1e-6));

  // The replacement magnitude is configurable independently of the threshold.
  cfg.floor_replacement = 0.01;
  const auto s2 = segment_window_fft(x, cfg, 64.0);
  CHECK(std::abs(s2.at(0, 9)) == doctest::Approx(0.01 * 0.5).epsilon(1e-9));

  // A floor of sigma keeps bins above sigma*max untouched.
  cfg.floor_replacement.reset();
  cfg.sigma_floor = 1e-7;
  const auto s3 = segment_window_fft(x, cfg, 64.0);
  CHECK(std::abs(s3.at(0, 9)) == doctest::Approx(0.5e-5).epsilon(1e-9));
}

TEST_CASE("estimators match a direct-sum reference on small records") {
  for (const bool mean_first : {false, true}) {
    for (const auto window : {Window::Hann, Window::Rectangular}) {
      SegmentConfig cfg;
      cfg.segments = 3;
      cfg.segment_len = 16;
      cfg.window = window;
      cfg.mean_before_window = mean_first;
      const auto x = gaussian_record(48, 314);
      const auto s = segment_window_fft(x, cfg, 16.0);
      const std::size_t half = 8;

      std::vector<std::vector<cplx>> ref;
      for (std::size_t i = 0; i < 3; ++i)
        ref.push_back(brute_segment(std::span(x).subspan(i * 16, 16), cfg));
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 1; k <= half; ++k)
          CHECK(std::abs(s.at(i, k) - ref[i][k - 1]) < 1e-12);

      const auto p = power_spectrum(s);
      const auto b = bispectrum(s);
      const auto t = trispectrum(s, cfg);
      const auto bc = bicoherence(p, b);
      const auto tc = tricoherence(p, t);

      for (std::size_t m = 1; m <= half; ++m) {
        double want = 0.0;
        for (std::size_t i = 0; i < 3; ++i) want += std::norm(ref[i][m - 1]);
        CHECK(std::abs(p.at(m) - want / 3.0) < 1e-12);
      }

      // Full-plane sweep exercises the symmetry-extended accessors too.
      for (std::size_t m = 1; m <= half; ++m)
        for (std::size_t n = 1; m + n <= half; ++n) {
          cplx want{0.0, 0.0};
          for (std::size_t i = 0; i < 3; ++i)
            want += ref[i][m - 1] * ref[i][n - 1] * std::conj(ref[i][m + n - 1]);
          want /= 3.0;
          CHECK(b.contains(m, n));
          CHECK(std::abs(b.at(m, n) - want) < 1e-12);
          const double denom = std::sqrt(p.at(m + n) * p.at(m) * p.at(n));
          CHECK(std::abs(bc.raw_at(m, n) - std::abs(want) / denom) < 1e-10);
        }

      for (std::size_t m = 1; m <= half; ++m)
        for (std::size_t n = 1; n <= half; ++n)
          for (std::size_t o = 1; o <= half; ++o) {
            if (m + n + o > half) {
              CHECK(!t.contains(m, n, o));
              continue;
            }
            cplx want{0.0, 0.0};
            for (std::size_t i = 0; i < 3; ++i)
              want += ref[i][m - 1] * ref[i][n - 1] * ref[i][o - 1] *
                      std::conj(ref[i][m + n + o - 1]);
            want /= 3.0;
            CHECK(t.contains(m, n, o));
            CHECK(std::abs(t.at(m, n, o) - want) < 1e-12);
            const double denom =
                std::sqrt(p.at(m + n + o) * p.at(m) * p.at(n) * p.at(o));
            CHECK(std::abs(tc.raw_at(m, n, o) - std::abs(want) / denom) < 1e-10);
          }
    }
  }
}

TEST_CASE("rectangular window makes the mean-order switch a no-op") {
  SegmentConfig a;
  a.segments = 4;
  a.segment_len = 32;
  a.window = Window::Rectangular;
  SegmentConfig b = a;
  b.mean_before_window = true;
  const auto x = gaussian_record(128, 9);
  const auto sa = segment_window_fft(x, a, 32.0);
  const auto sb = segment_window_fft(x, b, 32.0);
  for (std::size_t i = 0; i < sa.bins.size(); ++i) CHECK(sa.bins[i] == sb.bins[i]);
}

TEST_CASE("hann window makes the mean-order switch observable") {
  SegmentConfig a;
  a.segments = 1;
  a.segment_len = 64;
  SegmentConfig b = a;
  b.mean_before_window = true;
  // A fractional cycle count leaves the plain and window-weighted means
  // different; on whole cycles the two orders remove the same constant.
  std::vector<double> x(64);
  for (std::size_t l = 0; l < 64; ++l)
    x[l] = 0.5 + std::sin(2.0 * kPi * 6.3 * static_cast<double>(l) / 64.0);
  const auto sa = segment_window_fft(x, a, 64.0);
  const auto sb = segment_window_fft(x, b, 64.0);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < sa.bins.size(); ++i)
    max_diff = std::max(max_diff, std::abs(sa.bins[i] - sb.bins[i]));
  CHECK(max_diff > 1e-4);
  CHECK(std::abs(sa.at(0, 6)) == doctest::Approx(std::abs(sb.at(0, 6))).epsilon(0.05));
}

TEST_CASE("duplicated segments average to the single-segment result") {
  const auto seg = gaussian_record(64, 17);
  std::vector<double> twice(seg);
  twice.insert(twice.end(), seg.begin(), seg.end());
  SegmentConfig one;
  one.segments = 1;
  one.segment_len = 64;
  SegmentConfig two = one;
  two.segments = 2;
  const auto s1 = segment_window_fft(seg, one, 64.0);
  const auto s2 = segment_window_fft(twice, two, 64.0);
  const auto p1 = power_spectrum(s1), p2 = power_spectrum(s2);
  const auto b1 = bispectrum(s1), b2 = bispectrum(s2);
  const auto t1 = trispectrum(s1, one), t2 = trispectrum(s2, two);
  for (std::size_t k = 1; k <= 32; ++k) CHECK(p1.at(k) == doctest::Approx(p2.at(k)).epsilon(1e-14));
  for (std::size_t i = 0; i < b1.cells.size(); ++i)
    CHECK(std::abs(b1.cells[i] - b2.cells[i]) < 1e-14);
  for (std::size_t i = 0; i < t1.cells.size(); ++i)
    CHECK(std::abs(t1.cells[i] - t2.cells[i]) < 1e-14);
}

TEST_CASE("coherence maps are invariant under positive rescaling") {
  const auto x = gaussian_record(2048, 23);
  SegmentConfig cfg;
  cfg.segments = 8;
  cfg.segment_len = 256;
  cfg.max_tri_bin = 32;
  const auto s = segment_window_fft(x, cfg, 256.0);
  const auto bc = bicoherence(power_spectrum(s), bispectrum(s));
  const auto tc = tricoherence(power_spectrum(s), trispectrum(s, cfg));
  for (const double c : {1e-12, 3.7e5}) {
    std::vector<double> scaled(x);
    for (double& v : scaled) v *= c;
    const auto ss = segment_window_fft(scaled, cfg, 256.0);
    const auto bcs = bicoherence(power_spectrum(ss), bispectrum(ss));
    const auto tcs = tricoherence(power_spectrum(ss), trispectrum(ss, cfg));
    for (std::size_t i = 0; i < bc.raw.size(); ++i)
      CHECK(bcs.raw[i] == doctest::Approx(bc.raw[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < tc.raw.size(); ++i)
      CHECK(tcs.raw[i] == doctest::Approx(tc.raw[i]).epsilon(1e-12));
  }
}

TEST_CASE("quadratically coupled tones light up the bicoherence cell") {
  for (const double phi3 : {0.0, kPi / 2.0}) {
    const auto spec = case_i_spec(64, phi3, synth::PhaseMode::Fixed);
    const auto x = synth::gen_tones(spec, 1234);
    SegmentConfig cfg;
    cfg.segments = 64;
    cfg.segment_len = 512;
    const auto s = segment_window_fft(x, cfg, 16.0);
    const auto bc = bicoherence(power_spectrum(s), bispectrum(s));
    CHECK(bc.raw_at(20, 27) >= 0.95);
    CHECK(bc.at(20, 27) <= 1.0);
  }
}

TEST_CASE("per-segment random phase destroys the coupling") {
  const auto spec = case_i_spec(64, 0.0, synth::PhaseMode::PerSegmentRandom);
  const auto x = synth::gen_tones(spec, 1234);
  SegmentConfig cfg;
  cfg.segments = 64;
  cfg.segment_len = 512;
  const auto s = segment_window_fft(x, cfg, 16.0);
  const auto bc = bicoherence(power_spectrum(s), bispectrum(s));
  CHECK(bc.raw_at(20, 27) < 0.3);
}

TEST_CASE("phase-locked harmonics of a clipped sine give coherent peaks") {
  const hardlimit::SineInput input{2.0, 4.0, 0.0};
  const std::size_t n = 256, m = 32;
  SegmentConfig cfg;
  cfg.segments = m;
  cfg.segment_len = n;
  cfg.max_tri_bin = 64;

  // Additive noise keeps the estimate non-degenerate across segments.
  const hardlimit::HardLimitSpec bil{hardlimit::LimitKind::Bilateral, 1.0, 0.0};
  auto x = synth::gen_clipped_sine(input, bil, 64.0, n * m, 7, -35.0);
  auto s = segment_window_fft(x, cfg, 64.0);
  auto p = power_spectrum(s);
  auto tc = tricoherence(p, trispectrum(s, cfg));
  auto bc = bicoherence(p, bispectrum(s));
  CHECK(tc.raw_at(16, 16, 16) >= 0.9);
  CHECK(tc.raw_at(16, 16, 48) >= 0.9);
  // Bilateral clipping has no even harmonics, so no (k, k) bicoherence peak.
  CHECK(bc.raw_at(16, 16) < 0.3);

  const hardlimit::HardLimitSpec uni{hardlimit::LimitKind::Unilateral, 1.0, 0.0};
  x = synth::gen_clipped_sine(input, uni, 64.0, n * m, 7, -35.0);
  s = segment_window_fft(x, cfg, 64.0);
  p = power_spectrum(s);
  bc = bicoherence(p, bispectrum(s));
  tc = tricoherence(p, trispectrum(s, cfg));
  CHECK(bc.raw_at(16, 16) >= 0.95);
  CHECK(tc.raw_at(16, 16, 16) >= 0.9);
}

TEST_CASE("white noise spectrum matches the per-bin closed form") {
  // Mean removal subtracts the projection onto the window, so bins inside the
  // window mainlobe lose part of their variance. For input variance s2,
  //   E P(k) = (s2/N^2) (P0 (1 + |Wk|^2/W0^2) - 2 Re(Wk conj(Pk)) / W0)
  // with Wk the window DFT and Pk the DFT of the squared window.
  const std::size_t n = 128, m = 2048;
  const double s2 = 4.0;
  const auto x = gaussian_record(n * m, 99, 2.0);
  SegmentConfig cfg;
  cfg.segments = m;
  cfg.segment_len = n;
  const auto s = segment_window_fft(x, cfg, 128.0);
  const auto p = power_spectrum(s);

  const auto w = make_window(Window::Hann, n);
  std::vector<cplx> wk(n / 2 + 1), pk(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const auto ph = std::polar(1.0, -2.0 * kPi * static_cast<double>(k * l) /
                                          static_cast<double>(n));
      wk[k] += w[l] * ph;
      pk[k] += w[l] * w[l] * ph;
    }
  const double w0 = wk[0].real(), p0 = pk[0].real();

  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double want =
        s2 / static_cast<double>(n * n) *
        (p0 * (1.0 + std::norm(wk[k]) / (w0 * w0)) - 2.0 * (wk[k] * std::conj(pk[k])).real() / w0);
    CHECK(p.at(k) == doctest::Approx(want).epsilon(0.10));
  }

  // The notch at the bottom of the band is real, not an artifact of one seed.
  double tail = 0.0;
  for (std::size_t k = 10; k <= n / 2; ++k) tail += p.at(k);
  tail /= static_cast<double>(n / 2 - 9);
  CHECK(p.at(1) < 0.65 * tail);
  CHECK(p.at(1) > 0.5 * tail);
}

TEST_CASE("gaussian noise coherence stays under the detection threshold") {
  const std::size_t n = 128, m = 256;
  const auto x = gaussian_record(n * m, 424242);
  SegmentConfig cfg;
  cfg.segments = m;
  cfg.segment_len = n;
  cfg.max_tri_bin = 32;
  const auto s = segment_window_fft(x, cfg, 128.0);
  const auto p = power_spectrum(s);
  const auto bc = bicoherence(p, bispectrum(s));
  const auto tc = tricoherence(p, trispectrum(s, cfg));
  double bmax = 0.0, tmax = 0.0;
  for (double v : bc.raw) bmax = std::max(bmax, v);
  for (double v : tc.raw) tmax = std::max(tmax, v);
  CHECK(bmax < 0.3);
  CHECK(tmax < 0.45);
  CHECK(bmax > 0.02);  // a degenerate all-zero map would be a bug, not a pass
  CHECK(tmax > 0.02);
}

TEST_CASE("all-zero input produces finite zero coherence everywhere") {
  std::vector<double> x(512, 0.0);
  SegmentConfig cfg;
  cfg.segments = 4;
  cfg.segment_len = 128;
  cfg.max_tri_bin = 16;
  const auto s = segment_window_fft(x, cfg, 128.0);
  const auto p = power_spectrum(s);
  const auto bc = bicoherence(p, bispectrum(s));
  const auto tc = tricoherence(p, trispectrum(s, cfg));
  for (double v : p.values) CHECK(v == 0.0);
  for (double v : bc.raw) {
    CHECK(std::isfinite(v));
    CHECK(v == 0.0);
  }
  for (double v : tc.raw) {
    CHECK(std::isfinite(v));
    CHECK(v == 0.0);
  }
}

TEST_CASE("a linear filter leaves coherence peaks in place") {
  const auto spec = case_i_spec(64, 0.0, synth::PhaseMode::Fixed);
  const auto x = synth::gen_tones(spec, 5150);
  const synth::FilterSpec lp{synth::FilterSpec::Kind::FirstOrderLowPass, 2.0, 16.0};
  const auto y = synth::apply_filter(x, lp);
  SegmentConfig cfg;
  cfg.segments = 64;
  cfg.segment_len = 512;
  const auto sx = segment_window_fft(x, cfg, 16.0);
  const auto sy = segment_window_fft(y, cfg, 16.0);
  const auto bx = bicoherence(power_spectrum(sx), bispectrum(sx));
  const auto by = bicoherence(power_spectrum(sy), bispectrum(sy));
  CHECK(std::abs(bx.raw_at(20, 27) - by.raw_at(20, 27)) < 0.05);
  CHECK(by.raw_at(20, 27) >= 0.95);
}

TEST_CASE("configuration violations are rejected") {
  SegmentConfig cfg;
  cfg.segments = 4;
  cfg.segment_len = 64;
  std::vector<double> x(100, 0.0);
  CHECK_THROWS_AS(segment_window_fft(x, cfg, 64.0), Error);  // 256 > 100

  x.assign(256, 0.0);
  cfg.segment_len = 63;
  CHECK_THROWS_AS(segment_window_fft(x, cfg, 64.0), Error);  // odd length

  cfg.segment_len = 2;
  CHECK_THROWS_AS(segment_window_fft(x, cfg, 64.0), Error);  // too short

  cfg.segment_len = 64;
  cfg.sigma_floor = 1.5;
  CHECK_THROWS_AS(segment_window_fft(x, cfg, 64.0), Error);

  cfg.sigma_floor = 1e-3;
  cfg.max_tri_bin = 40;  // above 64/2
  CHECK_THROWS_AS(segment_window_fft(x, cfg, 64.0), Error);
}

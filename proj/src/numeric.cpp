#include "hosdetect/numeric.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "hosdetect/common.hpp"

namespace hosdetect::numeric {

namespace {

GaussRule build_gauss(int order) {
  // Newton iteration on Legendre P_n; roots seeded by the Chebyshev estimate.
  GaussRule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = order * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[order - 1 - i] = w;
  }
  return r;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 2 || order > 256) fail(ErrorKind::Config, "gauss_legendre: order out of range");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss(order)).first;
  return it->second;
}

std::complex<double> goertzel(std::span<const double> x, double f_cyc) {
  // Direct correlation; numerically safer than the recurrence for long spans.
  const double w = 2.0 * std::numbers::pi * f_cyc;
  double re = 0.0, im = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    const double ph = w * static_cast<double>(l);
    re += x[l] * std::cos(ph);
    im -= x[l] * std::sin(ph);
  }
  const double n = x.empty() ? 1.0 : static_cast<double>(x.size());
  return {re / n, im / n};
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

GaussianRng::GaussianRng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t GaussianRng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double GaussianRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double GaussianRng::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  have_spare_ = true;
  return r * std::cos(th);
}

}  // namespace hosdetect::numeric

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hosdetect::numeric {

// Nodes and weights on [-1, 1]. Computed once per order and cached.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

// Normalized DFT coefficient (1/L)*sum x[l]*exp(-i*2*pi*f_cyc*l), f_cyc in
// cycles per sample. Exact single-bin evaluation; no windowing.
std::complex<double> goertzel(std::span<const double> x, double f_cyc);

std::size_t next_pow2(std::size_t n);

// Deterministic standard-normal stream: splitmix64-seeded xoshiro256++ feeding
// a Box-Muller pair. std::normal_distribution is implementation-defined, which
// would break the byte-identical output contract.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed);
  double next();
  double uniform();  // [0, 1)

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
  std::uint64_t next_u64();
};

}  // namespace hosdetect::numeric

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace treenet {

// Finalizer step of splitmix64. Used both for seed derivation and for
// stream initialization so that nearby seeds give unrelated streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives a child seed from (root, tag, index). The tag keeps streams of
// different experiments apart, the index separates replicates. Stable
// across platforms; recorded in run manifests.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index) {
  std::uint64_t h = mix64(root ^ 0x8c2f9d1b5a6e3c47ull);
  for (unsigned char c : tag) h = mix64(h ^ c);
  return mix64(h ^ index);
}

// xoshiro256** with splitmix64 seeding. Hand-rolled rather than taken from
// <random> because the standard distributions are implementation-defined
// and the toolkit promises byte-identical reruns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      sm += 0x9e3779b97f4a7c15ull;
      w = mix64(sm);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as an argument to log().
  double next_double_open() { return 1.0 - next_double(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Exact Poisson sampling: sequential inversion for small means, the
  // transformed-rejection scheme (Hormann's PTRS) for large ones.
  std::int64_t poisson(double lambda) {
    if (!(lambda > 0)) return 0;
    if (lambda < 10.0) return poisson_inversion(lambda);
    return poisson_ptrs(lambda);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::int64_t poisson_inversion(double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = next_double_open();
    while (prod > limit) {
      ++k;
      prod *= next_double_open();
    }
    return k;
  }

  std::int64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = next_double() - 0.5;
      const double v = next_double_open();
      const double us = 0.5 - std::abs(u);
      const auto k =
          std::int64_t(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
      if (us >= 0.07 && v <= v_r) return k;
      if (k < 0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * loglam - lambda - std::lgamma(double(k) + 1.0)) {
        return k;
      }
    }
  }

  std::uint64_t s_[4];
};

}  // namespace treenet

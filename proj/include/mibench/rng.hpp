#ifndef MIBENCH_RNG_HPP
#define MIBENCH_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mibench {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the bytes of a string.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a named sub-stream: mix64(seed ^ mix64(fnv1a(tag))).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return mix64(seed ^ mix64(fnv1a(tag)));
}

// Seeded random stream. Every draw is defined in terms of the raw
// std::mt19937_64 output so results do not depend on the standard library's
// distribution implementations:
//   uniform()  = (u >> 11) * 2^-53, in [0, 1)
//   normal()   = Marsaglia polar method on 2*uniform()-1 pairs, second value cached
//   index(n)   = u mod n after rejecting u >= floor(2^64 / n) * n
//   derangement(n) = permutation(n) redrawn until it has no fixed point
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t u;
    do {
      u = engine_();
    } while (u >= limit);
    return u % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  // Uniform permutation of 0..n-1 with no fixed point; n must be at least 2.
  std::vector<std::size_t> derangement(std::size_t n) {
    for (;;) {
      std::vector<std::size_t> p = permutation(n);
      bool fixed = false;
      for (std::size_t i = 0; i < n && !fixed; ++i) fixed = p[i] == i;
      if (!fixed) return p;
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mibench

#endif  // MIBENCH_RNG_HPP

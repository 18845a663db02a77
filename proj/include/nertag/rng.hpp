#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nertag {

// splitmix64 step. Used to derive per-record seeds from a run seed; the
// exact constants matter because derived seeds are part of the documented
// output contract (docs/formats.md, "Reproducibility").
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the i-th record of a seeded batch operation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// Deterministic random source. mt19937_64 is fully specified by the
// standard, and the bounded/unit draws below avoid std::*_distribution,
// whose output is implementation-defined. Identical seeds therefore give
// identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). Modulo with rejection of the biased tail.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
  }

  // Uniform double in [0, 1), 53 bits of precision.
  double unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Fisher-Yates, iterating i = n-1 .. 1 with j = below(i+1).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k slots of a uniform draw without replacement from [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t d = 0; d < k; ++d) {
      const std::size_t j = d + static_cast<std::size_t>(below(n - d));
      std::swap(idx[d], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nertag

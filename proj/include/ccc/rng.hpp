#pragma once

// Deterministic random utilities. mt19937_64 has a fully specified stream,
// and the value mappings below are hand-rolled, so identical seeds give
// identical sequences on every platform.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ccc {

// Seed derivation / stable hashing.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// Derives an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 s(base ^ (0x517cc1b727220a95ULL * (stream + 1)));
  return s.next();
}

/// Stable 64-bit hash of a pair, used for persistent node membership.
inline std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b) {
  SplitMix64 s(a * 0x9e3779b97f4a7c15ULL + b + 0x2545f4914f6cdd1dULL);
  s.next();
  return s.next();
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal, Box-Muller. Consumes two engine draws per call.
  double normal() {
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;        // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::size_t index(std::size_t n) {
    assert(n > 0);
    return static_cast<std::size_t>(engine_() % n);
  }

  bool coin(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices drawn from [0, n), partial Fisher-Yates.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    assert(k <= n);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ccc

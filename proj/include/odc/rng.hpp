#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace odc::rng {

// Counter-based random streams. Every draw is a pure function of
// (seed, stream tag, counters), so results do not depend on evaluation
// order and a run can be resumed mid-stream from just the counters.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ull + b + (a << 6) + (a >> 2)));
}

/// A named substream of the run seed, e.g. Stream(seed, "noise").
struct Stream {
  std::uint64_t key;

  Stream(std::uint64_t seed, const char* tag) : key(splitmix64(seed)) {
    for (const char* p = tag; *p; ++p) key = mix(key, static_cast<std::uint64_t>(*p));
  }

  Stream at(std::uint64_t c) const {
    Stream s = *this;
    s.key = mix(s.key, c);
    return s;
  }
  Stream at(std::uint64_t c0, std::uint64_t c1) const { return at(c0).at(c1); }
  Stream at(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2) const {
    return at(c0).at(c1).at(c2);
  }

  /// Uniform in (0,1), never exactly 0 or 1.
  double uniform(std::uint64_t c) const {
    const std::uint64_t bits = splitmix64(mix(key, c));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two derived uniforms.
  double normal(std::uint64_t c) const {
    const Stream s = at(c);
    const double u1 = s.uniform(0);
    const double u2 = s.uniform(1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n) by rejection-free scaling (n << 2^53).
  std::uint64_t below(std::uint64_t c, std::uint64_t n) const {
    const double u = uniform(c);
    std::uint64_t k = static_cast<std::uint64_t>(u * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }
};

/// Deterministic permutation of {0,..,n-1} (Fisher-Yates on the stream).
inline std::vector<int> permutation(const Stream& s, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(s.below(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

/// First k entries of a permutation keyed by counter c: a minibatch without
/// replacement, stable under the draw order.
inline std::vector<int> sample_indices(const Stream& s, std::uint64_t c, int n, int k) {
  std::vector<int> p = permutation(s.at(c), n);
  if (k < n) p.resize(k);
  return p;
}

}  // namespace odc::rng

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace eulab {

// -------------------------------------------------------------------------
// Hashing (FNV-1a 64). Used for config hashes, state hashes and the
// deterministic dt jitter. Stable across platforms by construction.
// -------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return fnv1a64(&v, sizeof(v), h);
}

inline std::uint64_t bits_of(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof(b));
  return b;
}

/// Map 64 hash bits to a uniform double in [0, 1).
inline double uniform_from_bits(std::uint64_t b) {
  return static_cast<double>(b >> 11) * 0x1.0p-53;
}

inline std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// -------------------------------------------------------------------------
// Deterministic RNG: splitmix64 stream. Distribution mapping is written out
// explicitly so that draws are identical on every platform.
// -------------------------------------------------------------------------

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}

  std::uint64_t next() {
    s_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform01() { return uniform_from_bits(next()); }

  /// Uniform in [-1, 1].
  double uniform_sym() { return 2.0 * uniform01() - 1.0; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::uint64_t s_;
};

// -------------------------------------------------------------------------
// 17-significant-digit decimal serialization: round-trips doubles exactly.
// -------------------------------------------------------------------------

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

// -------------------------------------------------------------------------
// Deterministic fork/join over an index range. Each task writes only its own
// slot, so results are identical for any worker count.
// -------------------------------------------------------------------------

inline void parallel_for_indexed(std::size_t n, int workers,
                                 const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += nw) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace eulab

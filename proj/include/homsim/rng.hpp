#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

namespace homsim {

// splitmix64, used only to derive well-separated engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-stream RNG. Streams derived from (seed, stream_id)
/// are independent, so parallel blocks (e.g. delay points of a scan)
/// produce the same output regardless of execution order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(mix64(mix64(seed) ^ mix64(stream_id ^ 0xa076'1d64'78bd'642fULL))) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform() { return unit_(engine_); }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return unit_(engine_) < p;
  }

  double normal(double mean, double sigma) {
    if (sigma <= 0.0) return mean;
    std::normal_distribution<double> d(mean, sigma);
    return d(engine_);
  }

  // Knuth-style inversion; intended for small means (per-pulse photon numbers).
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<int> d(mean);
    return d(engine_);
  }

  int binomial(int n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<int> d(n, p);
    return d(engine_);
  }

  /// Number of failures before the next success for success probability p.
  /// Used to skip-sample sparse event streams over long pulse trains. The
  /// result is capped at 2^62 so downstream int64 index arithmetic cannot
  /// overflow; for p below ~1e-12 the next success lies beyond any pulse
  /// train this simulator handles anyway.
  std::uint64_t geometric_skip(double p) {
    constexpr std::uint64_t cap = 1ULL << 62;
    if (p <= 1e-12) return cap;
    std::geometric_distribution<std::uint64_t> d(p);
    return std::min(d(engine_), cap);
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace homsim

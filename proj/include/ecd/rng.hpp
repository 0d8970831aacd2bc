#pragma once

// Self-contained random number generation. Everything downstream (generator,
// inference, benchmarks) promises bit-identical output for a fixed seed, so we
// avoid std:: distributions (their draw sequences are implementation-defined)
// and keep every sampler's consumption pattern fixed.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ecd/errors.hpp"

namespace ecd {

// xoshiro256++ seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      // splitmix64 step
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 significant bits.
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Lemire's multiply-with-rejection, unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw input_error("Rng::below: n must be positive");
    using u128 = unsigned __int128;
    std::uint64_t x = next_u64();
    u128 m = static_cast<u128>(x) * static_cast<u128>(n);
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<u128>(x) * static_cast<u128>(n);
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  bool bernoulli(double p) { return u01() < p; }

  // Standard normal via Box-Muller (cosine branch only; the sine value is
  // discarded to keep the stream layout position-independent).
  double normal() {
    double u1 = u01();
    while (u1 <= 0.0) u1 = u01();
    const double u2 = u01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Gamma(shape, 1). Marsaglia-Tsang for shape >= 1, with the standard
  // boost gamma(a) = gamma(a+1) * U^(1/a) for shape < 1. Shapes far below 1
  // (e.g. the epsilon guards around 1e-5) underflow to exact 0, which is the
  // intended mass-at-zero limit.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw input_error("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      double u = u01();
      const double g = gamma(shape + 1.0);
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  // Beta(a, b) from two gamma draws. If both draws underflow to zero the
  // limiting two-point distribution is used.
  double beta(double a, double b) {
    const double g1 = gamma(a);
    const double g2 = gamma(b);
    const double sum = g1 + g2;
    if (sum == 0.0) return u01() < a / (a + b) ? 1.0 : 0.0;
    return g1 / sum;
  }

  // Dirichlet over the given concentration vector. Components with alpha == 0
  // are exact zeros and consume no draws; an all-underflow vector comes back
  // as all zeros (caller decides what a degenerate membership means).
  std::vector<double> dirichlet(std::span<const double> alpha) {
    std::vector<double> draw(alpha.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] > 0.0) {
        draw[i] = gamma(alpha[i]);
        total += draw[i];
      }
    }
    if (total > 0.0)
      for (auto& v : draw) v /= total;
    return draw;
  }

  // Index ~ Cat(weights). Weights need not be normalized; total must be > 0.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw input_error("Rng::categorical: nonpositive total weight");
    const double r = u01() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      acc += weights[i];
      if (r < acc) return i;
    }
    return last_positive;  // guard against fp shortfall in the running sum
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace ecd

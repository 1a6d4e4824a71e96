#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace chemstack {

// Deterministic random source. All distribution sampling is done by inversion
// (or Box-Muller) on top of mt19937_64 so that a given seed produces the same
// stream on every platform and across repeated invocations of the same binary.
// std::<distribution> types are intentionally not used: their output is
// implementation-defined and would break the byte-identical-output guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_pos() { return 1.0 - uniform01(); }

  double exponential(double rate) {
    return -std::log(uniform01_pos()) / rate;
  }

  // Box-Muller without caching: two engine draws per variate, which keeps the
  // stream position independent of call history.
  double normal(double mu, double sigma) {
    const double u = uniform01_pos();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    return mu + sigma * r * std::cos(6.283185307179586476925287 * v);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n). Multiply-shift avoids modulo bias.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

  // Index into `weights` with probability proportional to each entry.
  // `total` must equal the sum of weights (callers track it incrementally).
  std::size_t pick_weighted(std::span<const double> weights, double total) {
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Child stream whose seed depends only on (parent seed, tag).
  Rng derive(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

  // splitmix64-style mixer; used for seed derivation everywhere so that seed
  // trees are reproducible without sharing engine state.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace chemstack

#pragma once

// Seedable random source whose output is identical on every platform:
// std::mt19937_64 is fully specified by the standard, but the std
// distributions are not, so the conversions to uniform/normal variates and
// integer ranges are done here.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tomo {

// Stateless mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Seed for an independent sub-stream addressed by `path`, e.g. {k, rep} of a
// sweep cell. Same (seed, path) always gives the same stream.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Unbiased integer in [0, n).
  std::size_t below(std::size_t n);
  // Standard normal via Box-Muller.
  double normal();
  double lognormal(double sigma) { return std::exp(sigma * normal()); }
  // Uniform random k-subset of {0, ..., n-1}, sorted ascending.
  std::vector<std::size_t> subset(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tomo

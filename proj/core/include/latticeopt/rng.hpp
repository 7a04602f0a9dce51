#pragma once

#include <cstdint>
#include <random>

namespace latticeopt {

/// SplitMix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for item `index` of a stream keyed by `master`. Independent of
/// scheduling order, so parallel generation reproduces serial output.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Portable seeded generator. The engine (mt19937_64) output is fixed by the
/// standard; the distributions below are implemented here rather than taken
/// from <random>, whose distribution algorithms vary between library vendors.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli_half() { return (engine_() >> 63) != 0; }

private:
  std::mt19937_64 engine_;
};

}  // namespace latticeopt

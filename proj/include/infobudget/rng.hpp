#pragma once

// Seeded generators with a fixed, platform-independent output stream.
//
// Stream generator: xoshiro256** (Blackman & Vigna), state filled from
// SplitMix64(seed). Child seeds come from derive_seed(), a SplitMix64
// finalizer over (base, index), so draws can be split across workers without
// changing results. Bounded integers use Lemire's multiply-shift rejection
// method, so no std::*_distribution (whose output is implementation-defined)
// is involved anywhere.

#include <cstdint>
#include <string_view>

namespace infobudget {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

// Seed for the index-th child stream of `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

// FNV-1a 64-bit; used for item-id seeding and config hashes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
  // Uniform on {0, ..., bound-1}; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Standard normal via Box-Muller (one variate per call).
  double normal() noexcept;
  // Exponential(1), for Dirichlet sampling.
  double exponential() noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace infobudget

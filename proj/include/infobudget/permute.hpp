#pragma once

// Content-preserving reorderings of n evidence chunks.
//
// A Permutation stores, for each output slot, the chunk placed there:
// reordered[slot] = chunks[perm[slot]]. Internally 0-based; report files use
// 1-based index arrays.

#include <cstdint>
#include <span>
#include <vector>

namespace infobudget {

class Permutation {
 public:
  Permutation() = default;
  // Throws InputError unless `slot_to_chunk` is a bijection on {0..n-1}.
  explicit Permutation(std::vector<std::size_t> slot_to_chunk);

  static Permutation identity(std::size_t n);
  static Permutation from_one_based(std::span<const std::int64_t> indices);

  std::size_t size() const noexcept { return map_.size(); }
  std::size_t operator[](std::size_t slot) const { return map_[slot]; }
  const std::vector<std::size_t>& slots() const noexcept { return map_; }
  bool is_identity() const noexcept;

  // positions()[chunk] = slot holding that chunk (0-based).
  std::vector<std::size_t> positions() const;
  Permutation inverse() const;
  // (this * other)[slot] = this[other[slot]]: apply `other`'s reordering to
  // the sequence already reordered by `this`.
  Permutation compose(const Permutation& other) const;
  std::vector<std::int64_t> to_one_based() const;

  template <class T>
  std::vector<T> apply(std::span<const T> items) const {
    std::vector<T> out;
    out.reserve(map_.size());
    for (std::size_t c : map_) out.push_back(items[c]);
    return out;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation& a, const Permutation& b) { return a.map_ <=> b.map_; }

 private:
  std::vector<std::size_t> map_;
};

struct BandedSpec {
  std::size_t n = 0;
  std::size_t k_bands = 6;
  std::uint64_t seed = 0;
};

// Contiguous band sizes covering n slots; sizes differ by at most one with the
// larger bands first. Bands may be empty when k > n.
std::vector<std::size_t> band_sizes(std::size_t n, std::size_t k_bands);

// Shuffle within each band (Fisher-Yates, seeded); bands never exchange chunks.
Permutation banded_permutation(const BandedSpec& spec);

// Fisher-Yates over all n chunks.
Permutation uniform_permutation(std::size_t n, std::uint64_t seed);

struct UniqueDraw {
  std::vector<Permutation> permutations;
  bool shortfall = false;
  std::size_t attempts = 0;
};

// Up to m distinct banded permutations, attempt j using seed
// derive_seed(spec.seed, j), at most 50 m attempts. Results are a prefix-stable
// sequence: the first m' entries of a draw for m > m' equal the draw for m'.
// With lead_with_identity the identity ordering is placed first.
UniqueDraw draw_unique(std::size_t m, const BandedSpec& spec, bool lead_with_identity = false);

}  // namespace infobudget

#include "infobudget/permute.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "infobudget/error.hpp"
#include "infobudget/rng.hpp"

namespace infobudget {

namespace {

constexpr std::size_t kAttemptsPerRequest = 50;

void shuffle_range(std::vector<std::size_t>& v, std::size_t begin, std::size_t end, Rng& rng) {
  for (std::size_t i = end; i > begin + 1; --i) {
    const std::size_t span = i - begin;
    const std::size_t j = begin + static_cast<std::size_t>(rng.below(span));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Permutation::Permutation(std::vector<std::size_t> slot_to_chunk) : map_(std::move(slot_to_chunk)) {
  std::vector<bool> seen(map_.size(), false);
  for (std::size_t c : map_) {
    if (c >= map_.size() || seen[c]) throw InputError("permutation is not a bijection");
    seen[c] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

Permutation Permutation::from_one_based(std::span<const std::int64_t> indices) {
  std::vector<std::size_t> m;
  m.reserve(indices.size());
  for (std::int64_t i : indices) {
    if (i < 1) throw InputError("1-based permutation index below 1");
    m.push_back(static_cast<std::size_t>(i - 1));
  }
  return Permutation(std::move(m));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < map_.size(); ++i) {
    if (map_[i] != i) return false;
  }
  return true;
}

std::vector<std::size_t> Permutation::positions() const {
  std::vector<std::size_t> pos(map_.size());
  for (std::size_t slot = 0; slot < map_.size(); ++slot) pos[map_[slot]] = slot;
  return pos;
}

Permutation Permutation::inverse() const { return Permutation(positions()); }

Permutation Permutation::compose(const Permutation& other) const {
  if (other.size() != size()) throw InputError("cannot compose permutations of different sizes");
  std::vector<std::size_t> m(size());
  for (std::size_t slot = 0; slot < size(); ++slot) m[slot] = map_[other.map_[slot]];
  return Permutation(std::move(m));
}

std::vector<std::int64_t> Permutation::to_one_based() const {
  std::vector<std::int64_t> out(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) out[i] = static_cast<std::int64_t>(map_[i]) + 1;
  return out;
}

std::vector<std::size_t> band_sizes(std::size_t n, std::size_t k_bands) {
  if (k_bands == 0) throw InputError("k_bands must be >= 1");
  std::vector<std::size_t> sizes(k_bands, n / k_bands);
  for (std::size_t b = 0; b < n % k_bands; ++b) ++sizes[b];
  return sizes;
}

Permutation banded_permutation(const BandedSpec& spec) {
  if (spec.n == 0) throw InputError("banded permutation needs n >= 1");
  std::vector<std::size_t> m(spec.n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  Rng rng(spec.seed);
  std::size_t begin = 0;
  for (std::size_t size : band_sizes(spec.n, spec.k_bands)) {
    shuffle_range(m, begin, begin + size, rng);
    begin += size;
  }
  return Permutation(std::move(m));
}

Permutation uniform_permutation(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("uniform permutation needs n >= 1");
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  Rng rng(seed);
  shuffle_range(m, 0, n, rng);
  return Permutation(std::move(m));
}

UniqueDraw draw_unique(std::size_t m, const BandedSpec& spec, bool lead_with_identity) {
  if (m == 0) throw InputError("draw_unique needs m >= 1");
  UniqueDraw out;
  std::set<Permutation> seen;
  if (lead_with_identity) {
    out.permutations.push_back(Permutation::identity(spec.n));
    seen.insert(out.permutations.back());
  }
  const std::size_t cap = kAttemptsPerRequest * m;
  while (out.permutations.size() < m && out.attempts < cap) {
    BandedSpec attempt = spec;
    attempt.seed = derive_seed(spec.seed, out.attempts);
    ++out.attempts;
    Permutation p = banded_permutation(attempt);
    if (seen.insert(p).second) out.permutations.push_back(std::move(p));
  }
  out.shortfall = out.permutations.size() < m;
  return out;
}

}  // namespace infobudget

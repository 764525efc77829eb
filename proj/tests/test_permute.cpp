#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "infobudget/error.hpp"
#include "infobudget/permute.hpp"
#include "infobudget/rng.hpp"

using namespace infobudget;

namespace {

bool is_bijection(const Permutation& p) {
  std::vector<std::size_t> s = p.slots();
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != i) return false;
  }
  return true;
}

// Slot ranges [begin, end) of each band, larger bands first.
std::vector<std::pair<std::size_t, std::size_t>> bands(std::size_t n, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t size = n / k + (b < n % k ? 1 : 0);
    out.emplace_back(start, start + size);
    start += size;
  }
  return out;
}

}  // namespace

TEST_CASE("Permutation basics") {
  CHECK_THROWS_AS(Permutation({0, 0, 1}), InputError);
  CHECK_THROWS_AS(Permutation({0, 3}), InputError);
  const Permutation p({2, 0, 1});
  CHECK(p.positions() == std::vector<std::size_t>{1, 2, 0});
  CHECK(p.compose(p.inverse()).is_identity());
  CHECK(p.inverse().compose(p).is_identity());
  CHECK(Permutation::identity(5).is_identity());
  CHECK(p.to_one_based() == std::vector<std::int64_t>{3, 1, 2});
  const std::vector<std::int64_t> one{3, 1, 2};
  CHECK(Permutation::from_one_based(one) == p);
  const std::vector<std::string> chunks{"a", "b", "c"};
  CHECK(p.apply<std::string>(chunks) == std::vector<std::string>{"c", "a", "b"});
  const std::vector<std::int64_t> bad{0, 1};
  CHECK_THROWS(Permutation::from_one_based(bad));
}

TEST_CASE("band sizes") {
  CHECK(band_sizes(12, 6) == std::vector<std::size_t>(6, 2));
  CHECK(band_sizes(14, 6) == std::vector<std::size_t>{3, 3, 2, 2, 2, 2});
  CHECK(band_sizes(3, 6) == std::vector<std::size_t>{1, 1, 1, 0, 0, 0});
  CHECK_THROWS(band_sizes(5, 0));
}

TEST_CASE("banded permutations stay inside their bands") {
  for (std::size_t n : {1u, 2u, 7u, 12u, 13u, 60u, 101u}) {
    for (std::size_t k : {1u, 3u, 6u, 10u}) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = banded_permutation({n, k, seed});
        REQUIRE(p.size() == n);
        REQUIRE(is_bijection(p));
        for (const auto& [b, e] : bands(n, k)) {
          for (std::size_t s = b; s < e; ++s) {
            REQUIRE(p[s] >= b);
            REQUIRE(p[s] < e);
          }
        }
        REQUIRE(banded_permutation({n, k, seed}) == p);
      }
    }
  }
  CHECK(banded_permutation({3, 6, 99}).is_identity());
}

TEST_CASE("n=12, k=6 reaches exactly 64 permutations") {
  std::set<Permutation> seen;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) seen.insert(banded_permutation({12, 6, seed}));
  CHECK(seen.size() == 64);
  const auto draw = draw_unique(64, {12, 6, 7});
  CHECK(draw.permutations.size() == 64);
  CHECK_FALSE(draw.shortfall);
  CHECK(std::set<Permutation>(draw.permutations.begin(), draw.permutations.end()) == seen);
}

TEST_CASE("draw_unique degenerate space, determinism, prefix stability") {
  auto d = draw_unique(5, {3, 6, 0});
  CHECK(d.permutations.size() == 1);
  CHECK(d.permutations[0].is_identity());
  CHECK(d.shortfall);
  CHECK(d.attempts == 250);

  const auto a = draw_unique(12, {60, 6, 42});
  const auto b = draw_unique(12, {60, 6, 42});
  CHECK(a.permutations.size() == 12);
  CHECK(a.permutations == b.permutations);
  CHECK(std::set<Permutation>(a.permutations.begin(), a.permutations.end()).size() == 12);

  const auto small = draw_unique(3, {60, 6, 42});
  CHECK(std::equal(small.permutations.begin(), small.permutations.end(), a.permutations.begin()));

  const auto lead = draw_unique(4, {60, 6, 42}, true);
  CHECK(lead.permutations.front().is_identity());
  CHECK(lead.permutations.size() == 4);
  CHECK_THROWS(draw_unique(0, {60, 6, 42}));
}

TEST_CASE("uniform permutations") {
  CHECK(uniform_permutation(1, 5).is_identity());
  CHECK(uniform_permutation(4, 77) == uniform_permutation(4, 77));
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[uniform_permutation(4, derive_seed(3, static_cast<std::uint64_t>(i))).slots()]++;
  CHECK(counts.size() == 24);
  const double expect = draws / 24.0;
  const double sigma = std::sqrt(draws * (1.0 / 24) * (23.0 / 24));
  double chi2 = 0.0;
  for (const auto& [perm, c] : counts) {
    CHECK(std::abs(c - expect) < 3 * sigma + 1);
    chi2 += (c - expect) * (c - expect) / expect;
  }
  // 23 degrees of freedom, 0.999 quantile is about 49.7
  CHECK(chi2 < 49.7);
}

TEST_CASE("PRNG reference values are stable") {
  // SplitMix64 from seed 0 (published reference outputs).
  SplitMix64 sm(0);
  CHECK(sm.next() == 0xe220a8397b1dcdafULL);
  CHECK(sm.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  Rng r(1);
  Rng r2(1);
  for (int i = 0; i < 100; ++i) REQUIRE(r.next_u64() == r2.next_u64());
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

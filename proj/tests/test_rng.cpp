#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "hmdetect/rng.hpp"

using namespace hmdetect;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
}

TEST_CASE("reference values pin the engine across platforms") {
  // Frozen from this implementation; any change to seeding, the engine or
  // the transforms shows up here.
  Rng rng(0);
  CHECK(rng.next() == 11091344671253066420ULL);
  CHECK(rng.next() == 13793997310169335082ULL);
  Rng seeded(42);
  CHECK(seeded.below(1000) == 83);
  CHECK(seeded.uniform01() == 0.37898025066266861);
  CHECK(seeded.normal() == 0.22162270150359331);
  CHECK(derive_seed(0, 1) == 10585070088600740897ULL);
  CHECK(derive_seed(0, 0) != derive_seed(0, 1));
  CHECK(derive_seed(1, 0) != derive_seed(0, 1));
}

TEST_CASE("below stays in range and hits every value") {
  Rng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.below(10);
    REQUIRE(v < 10);
    seen.insert(v);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("uniform01 lies in [0, 1) and normal has unit moments") {
  Rng rng(11);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("sample_without_replacement returns distinct in-range indices") {
  Rng rng(3);
  for (std::uint32_t n : {1u, 5u, 33u, 100u, 1000u}) {
    for (std::uint32_t k : {1u, 5u, 32u, 80u}) {
      if (k > n) continue;
      const auto s = sample_without_replacement(rng, n, k);
      REQUIRE(s.size() == k);
      std::set<std::uint32_t> uniq(s.begin(), s.end());
      CHECK(uniq.size() == k);
      CHECK(*uniq.rbegin() < n);
    }
  }
}

TEST_CASE("sample_without_replacement is uniform over elements") {
  Rng rng(5);
  std::vector<int> hits(10, 0);
  const int trials = 50000;
  for (int t = 0; t < trials; ++t) {
    for (auto i : sample_without_replacement(rng, 10, 3)) ++hits[i];
  }
  for (int h : hits) CHECK(std::abs(h / double(trials) - 0.3) < 0.01);
}

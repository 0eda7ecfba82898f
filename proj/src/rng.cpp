#include "hmdetect/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace hmdetect {

std::vector<std::uint32_t> sample_without_replacement(Rng& rng, std::uint32_t n,
                                                      std::uint32_t k) {
  std::vector<std::uint32_t> out;
  out.reserve(k);
  // Linear membership scans beat hashing for the usual sub-sample sizes.
  constexpr std::uint32_t kLinearLimit = 64;
  std::unordered_set<std::uint32_t> seen;
  auto contains = [&](std::uint32_t v) {
    if (k <= kLinearLimit) return std::find(out.begin(), out.end(), v) != out.end();
    return seen.count(v) != 0;
  };
  for (std::uint32_t j = n - k; j < n; ++j) {
    auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
    const std::uint32_t pick = contains(t) ? j : t;
    out.push_back(pick);
    if (k > kLinearLimit) seen.insert(pick);
  }
  return out;
}

}  // namespace hmdetect

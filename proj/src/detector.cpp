#include "hmdetect/detector.hpp"

#include <algorithm>
#include <cmath>

#include "hmdetect/errors.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {

std::vector<Decision> decide(const ScoreTable& scores, const Threshold& threshold) {
  if (std::isnan(threshold.gamma)) throw_validation("threshold gamma is NaN");
  std::vector<Decision> out;
  out.reserve(scores.entries.size());
  for (const auto& e : scores.entries) {
    out.push_back(Decision{e.id, e.score, e.score >= threshold.gamma});
  }
  return out;
}

Threshold calibrate_gamma(std::span<const double> clean_scores, double q) {
  if (clean_scores.empty()) throw_validation("cannot calibrate a threshold on no clean scores");
  if (!(q > 0.0 && q < 1.0)) throw_validation("quantile q must lie in (0, 1)");
  std::vector<double> sorted(clean_scores.begin(), clean_scores.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) throw_validation("non-finite clean score");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return Threshold{sorted[rank - 1], q};
}

std::string encode_decisions_csv(const std::vector<Decision>& decisions) {
  std::string out = "id,score,flagged\n";
  for (const auto& d : decisions) {
    out += d.id;
    out += ',';
    out += format_double(d.score);
    out += d.flagged ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace hmdetect

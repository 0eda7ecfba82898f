#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmdetect/score_table.hpp"

namespace hmdetect {

struct Threshold {
  double gamma = 0.0;
  // Set when gamma came from calibrate_gamma; nullopt means manual.
  std::optional<double> clean_quantile;
};

struct Decision {
  std::string id;
  double score = 0.0;
  bool flagged = false;  // score >= gamma
};

// Flags an entry as adversarial iff its score is >= gamma (ties flag).
std::vector<Decision> decide(const ScoreTable& scores, const Threshold& threshold);

// gamma = the ceil(q n)-th smallest clean score (1-based), i.e. the lower of
// the order statistics surrounding the q-quantile.
Threshold calibrate_gamma(std::span<const double> clean_scores, double q);

// CSV with header "id,score,flagged".
std::string encode_decisions_csv(const std::vector<Decision>& decisions);

}  // namespace hmdetect
